#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace d2wfp {

/// A point in time as microseconds since 1970-01-01T00:00:00Z.
struct UtcTime {
  std::int64_t micros = 0;

  static constexpr UtcTime from_seconds(std::int64_t s) { return UtcTime{s * 1'000'000}; }
  constexpr std::int64_t seconds() const {
    // floor division so pre-1970 instants bucket consistently
    return micros >= 0 ? micros / 1'000'000 : -((-micros + 999'999) / 1'000'000);
  }
  auto operator<=>(const UtcTime&) const = default;
};

/// Days since 1970-01-01 for a proleptic Gregorian civil date.
std::int64_t days_from_civil(std::int64_t year, unsigned month, unsigned day) noexcept;

/// "YYYY-MM-DDTHH:MM:SSZ"; a ".ffffff" fraction is added only when non-zero.
std::string format_iso8601(UtcTime t);

/// Always prints six fractional digits; fixed width for sortable manifests.
std::string format_iso8601_micros(UtcTime t);

/// Parses either form produced above.
std::optional<UtcTime> parse_iso8601(std::string_view text);

UtcTime utc_from_civil(int year, unsigned month, unsigned day, unsigned hour = 0,
                       unsigned minute = 0, unsigned second = 0);

/// Values outside [1990-01-01, 2100-01-01) are treated as implausible.
inline constexpr UtcTime kSanityLow = UtcTime::from_seconds(631152000);
inline constexpr UtcTime kSanityHigh = UtcTime::from_seconds(4102444800);

constexpr bool within_sanity_window(UtcTime t) {
  return t >= kSanityLow && t < kSanityHigh;
}

enum class EpochKind {
  UnixSeconds,
  UnixMillis,
  PrtimeMicros,    // us since 1970
  WebkitMicros,    // us since 1601
  FiletimeTicks,   // 100 ns since 1601
};

std::string_view to_string(EpochKind kind) noexcept;

struct NormalizedTime {
  UtcTime at;
  bool plausible = true;
};

/// Exact conversion of a raw stored timestamp; throws Error(Invalid) when the
/// result does not fit the microsecond range.
NormalizedTime normalize_timestamp(std::int64_t raw, EpochKind kind);

/// FILETIME is unsigned on disk, so it gets its own entry point.
NormalizedTime filetime_to_utc(std::uint64_t ticks);

/// Seconds between 1601-01-01 and 1970-01-01.
inline constexpr std::int64_t kEpochGap1601Seconds = 11644473600;

}  // namespace d2wfp
