#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "d2wfp/artifact.hpp"
#include "d2wfp/bytes.hpp"

namespace d2wfp::memscan {

enum class HitEncoding { Ascii, Utf16le };

std::string_view to_string(HitEncoding e) noexcept;

inline constexpr std::size_t kMaxUrlChars = 2048;
inline constexpr std::size_t kMaxEmailLocal = 64;
inline constexpr std::size_t kMaxEmailDomain = 255;
inline constexpr std::size_t kMaxQueryChars = 512;

struct PatternSet {
  bool url = true;
  bool onion = true;
  bool email = true;
  bool search_query = true;
  std::vector<std::string> keywords{"torbrowser", "tor browser", "hidden wiki", "torproject"};

  /// Longest possible match in bytes, UTF-16LE included.
  std::size_t max_match_bytes() const;
};

struct ScanHit {
  std::string pattern;  // url, onion_v2, onion_v3, email, keyword, search_query
  std::string text;     // matched characters, always ASCII
  std::uint64_t offset = 0;
  std::uint64_t length = 0;  // bytes covered in the dump
  HitEncoding encoding = HitEncoding::Ascii;
  std::string context;

  bool operator==(const ScanHit&) const = default;
};

struct ScanOptions {
  std::size_t radius = 64;
  std::size_t chunk_size = std::size_t{16} << 20;
};

/// Whole-buffer scan. Hits are ordered by (offset, pattern, encoding).
std::vector<ScanHit> scan(ByteView dump, const PatternSet& patterns = {},
                          const ScanOptions& options = {});

/// Same result as scan(), computed chunk by chunk with overlapping margins.
std::vector<ScanHit> scan_chunked(ByteView dump, const PatternSet& patterns = {},
                                  const ScanOptions& options = {});

/// Streams a file in chunks so dumps larger than memory can be scanned.
std::vector<ScanHit> scan_file(const std::filesystem::path& path, const PatternSet& patterns = {},
                               const ScanOptions& options = {});

/// Printable window [offset - radius, offset + length + radius) clamped to the
/// dump; non-printable bytes become '.'.
std::string context_window(ByteView dump, std::uint64_t offset, std::size_t radius,
                           std::size_t length = 0);

/// Maps hits to artifacts. Onion hits lying inside a URL hit are folded into
/// it. `store` prefixes the provenance locator.
std::vector<Artifact> classify_hits(const std::vector<ScanHit>& hits, std::string_view evidence_id,
                                    std::string_view store, Location location = Location::Ram,
                                    RecoveryState state = RecoveryState::MemoryResident);

}  // namespace d2wfp::memscan
