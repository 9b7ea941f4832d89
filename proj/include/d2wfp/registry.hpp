#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "d2wfp/artifact.hpp"
#include "d2wfp/bytes.hpp"
#include "d2wfp/time.hpp"

namespace d2wfp::registry {

inline constexpr std::uint32_t kRegNone = 0;
inline constexpr std::uint32_t kRegSz = 1;
inline constexpr std::uint32_t kRegExpandSz = 2;
inline constexpr std::uint32_t kRegBinary = 3;
inline constexpr std::uint32_t kRegDword = 4;
inline constexpr std::uint32_t kRegMultiSz = 7;
inline constexpr std::uint32_t kRegQword = 11;

/// Values larger than this are cut and flagged.
inline constexpr std::size_t kMaxValueData = std::size_t{1} << 20;

struct HiveValue {
  std::string name;  // empty for the default value
  std::uint32_t type = 0;
  Bytes data;
  bool truncated = false;
};

struct HiveKey {
  std::string name;
  std::string path;  // backslash-joined below the root; empty for the root
  UtcTime last_written;
  bool time_plausible = true;
  std::vector<HiveValue> values;
  std::vector<HiveKey> subkeys;

  const HiveKey* find(std::string_view relative_path) const;  // case-insensitive
};

struct ParsedHive {
  HiveKey root;
  std::vector<std::string> warnings;
};

/// Throws Error(NotHive) on a wrong magic, Error(CorruptHive) when the root
/// key cannot be read. Other malformed cells are skipped with a warning.
ParsedHive parse_hive(ByteView image);

std::string rot13(std::string_view text);

/// REG_SZ / REG_EXPAND_SZ / REG_MULTI_SZ data as UTF-8 (multi strings joined by '\n').
std::string value_text(const HiveValue& value);

enum class IndicatorSource { UserAssist, UninstallKey, MuiCache, PathHit };

std::string_view to_string(IndicatorSource s) noexcept;

struct ExecutionIndicator {
  IndicatorSource source = IndicatorSource::PathHit;
  std::string program;
  std::optional<std::uint32_t> run_count;
  std::optional<UtcTime> last_run;
  std::string key_path;
  std::string value_name;
  UtcTime key_written;
};

/// UserAssist entries for Tor programs, uninstall entries naming Tor Browser,
/// and any key or value mentioning "Tor Browser".
std::vector<ExecutionIndicator> find_tor_indicators(const HiveKey& root);

/// Flattened (key path, value name, type, data) set, used for diffs and
/// round-trip checks.
struct FlatValue {
  std::string key_path;
  std::string name;
  std::uint32_t type = 0;
  Bytes data;

  auto operator<=>(const FlatValue&) const = default;
};

std::vector<FlatValue> flatten(const HiveKey& root);

struct HiveDiff {
  std::vector<FlatValue> added;
  std::vector<FlatValue> removed;
};

/// Set difference over (path, value) pairs, before/after style.
HiveDiff diff_hives(const HiveKey& before, const HiveKey& after);

/// Indicators become Usage/Session artifacts; URLs and search terms found in
/// value data become URL / search artifacts. All carry UserSystemConfig.
std::vector<Artifact> hive_artifacts(const HiveKey& root, std::string_view evidence_id,
                                     std::string_view store);

}  // namespace d2wfp::registry
