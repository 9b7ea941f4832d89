#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include "d2wfp/corpus.hpp"

namespace d2wfp::corpus::detail {

/// mt19937_64 raw output is specified by the standard, so seeded streams are
/// identical across platforms. Distributions are not, hence the helpers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}
  Rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index)
      : g_(mix(seed, stream, index)) {}

  std::uint64_t next() { return g_(); }
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : g_() % n; }
  bool chance(unsigned percent) { return below(100) < percent; }

  template <typename C>
  const auto& pick(const C& c) {
    return c[below(std::size(c))];
  }

  static std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t h = a * 0x9e3779b97f4a7c15ULL;
    h ^= (b + 0x632be59bd9b4e019ULL) * 0xbf58476d1ce4e5b9ULL;
    h ^= (c + 0x94d049bb133111ebULL) * 0xd6e8feb86659fd39ULL;
    return h ^ (h >> 31);
  }

 private:
  std::mt19937_64 g_;
};

// Per-record streams, so record i does not depend on how many came before.
enum Stream : std::uint64_t {
  kHistory = 1,
  kBookmark,
  kCookie,
  kForm,
  kDownload,
  kLogin,
  kCache,
  kMemory,
  kHive,
  kDelete,
  kReinsert,
};

std::string random_onion_v3(Rng& rng);
std::string random_onion_v2(Rng& rng);
std::string random_token(Rng& rng, std::size_t n);
std::string pick_words(Rng& rng, std::size_t n, char sep);
UtcTime random_time(Rng& rng);

std::string history_url(std::uint64_t seed, std::size_t i);

}  // namespace d2wfp::corpus::detail
