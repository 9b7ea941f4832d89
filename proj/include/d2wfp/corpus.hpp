#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "d2wfp/artifact.hpp"
#include "d2wfp/bytes.hpp"
#include "d2wfp/time.hpp"

namespace d2wfp::corpus {

enum class AntiForensics { None, DeleteRows, Vacuum };

std::string_view to_string(AntiForensics arm) noexcept;
std::optional<AntiForensics> parse_anti_forensics(std::string_view s) noexcept;

enum class Encoding { Ascii, Utf16le };

struct MemoryPlant {
  std::string text;
  std::uint64_t offset = 0;
  Encoding encoding = Encoding::Ascii;
};

struct UserAssistPlant {
  std::string program;  // plain name; written ROT13-encoded
  std::uint32_t run_count = 0;
  UtcTime last_run;
};

struct HiveValuePlant {
  std::string key_path;  // relative to the hive root, backslash separated
  std::string name;
  std::string text;      // stored as REG_SZ (UTF-16LE, NUL terminated)
};

struct CorpusSpec {
  std::uint64_t seed = 1;

  std::size_t history = 0;
  std::size_t bookmarks = 0;
  std::size_t cookies = 0;
  std::size_t forms = 0;
  std::size_t downloads = 0;
  std::size_t logins = 0;
  std::size_t cache = 0;

  AntiForensics anti_forensics = AntiForensics::None;
  double delete_fraction = 0.4;
  std::size_t reinsert = 0;  // rows inserted after deletion (overwrite scenario)
  bool tor_layout = true;

  std::uint64_t memory_size = 0;  // 0 disables the dump
  std::size_t memory_urls = 0;    // RAM-only onion URLs at seeded offsets
  std::vector<MemoryPlant> memory_plants;

  bool hive = false;
  std::vector<UserAssistPlant> userassist;
  std::vector<std::string> uninstall_names;
  std::vector<HiveValuePlant> hive_values;

  // the first N history URLs are also planted in RAM and in TypedURLs
  std::size_t corroborate = 0;
};

/// Reads a spec in the key = value config format. Unknown keys are rejected.
CorpusSpec parse_corpus_spec(std::string_view text);

enum class Expectation {
  Live,           // readable through the live b-tree / store
  Carvable,       // deleted, bytes left in place
  Unrecoverable,  // deleted and compacted away
  OverwriteRisk,  // deleted, then new rows may have reused the space
  Memory,         // present in the RAM image
  Config,         // present in the registry hive
};

std::string_view to_string(Expectation e) noexcept;
std::optional<Expectation> parse_expectation(std::string_view s) noexcept;

struct TruthEntry {
  std::string store;    // "places.sqlite", "logins.json", "memory.raw", ...
  std::string locator;  // table:rowid, file name, offset, key path
  Category category = Category::BrowsingHistory;
  ArtifactKind kind = ArtifactKind::Urls;
  std::string value;
  std::vector<LabeledTime> timestamps;
  Expectation expect = Expectation::Live;

  bool operator==(const TruthEntry&) const = default;
};

struct GroundTruth {
  std::vector<TruthEntry> entries;

  std::size_t count(Expectation e) const;
  std::size_t count(Category c, Expectation e) const;
  void append(const GroundTruth& other);

  /// Tab-separated, one entry per line, in planting order.
  std::string serialize() const;
  static GroundTruth parse(std::string_view text);
};

/// Writes places/cookies/formhistory stores through the reference engine,
/// plus logins.json and cache2 entries. `dir` is created if missing.
GroundTruth generate_profile(const CorpusSpec& spec, const std::filesystem::path& dir);

/// Deletes a seeded subset of SQLite-backed rows (secure_delete off); the
/// vacuum arm compacts afterwards. Returns the truth with expectations updated.
GroundTruth apply_antiforensics(const std::filesystem::path& dir, AntiForensics arm,
                                const GroundTruth& truth, const CorpusSpec& spec);

/// Zero-filled image with plants at exact offsets.
GroundTruth generate_memory_dump(const CorpusSpec& spec, const std::filesystem::path& file);

GroundTruth generate_hive(const CorpusSpec& spec, const std::filesystem::path& file);

struct HiveValueImage {
  std::string name;
  std::uint32_t type = 0;
  Bytes data;

  bool operator==(const HiveValueImage&) const = default;
};

struct HiveKeyImage {
  std::string path;  // empty for the root
  UtcTime last_written;
  std::vector<HiveValueImage> values;
};

/// Serializes keys into a regf image. Parent keys are created implicitly;
/// keys are listed in any order.
Bytes build_hive(std::vector<HiveKeyImage> keys, std::string_view root_name = "ROOT");

/// The key/value set generate_hive writes for a spec.
std::vector<HiveKeyImage> hive_keys_for(const CorpusSpec& spec);

struct CorpusLayout {
  std::filesystem::path root;
  std::filesystem::path profile;
  std::filesystem::path memory;  // empty when not generated
  std::filesystem::path hive;    // empty when not generated
  std::filesystem::path manifest;
};

/// Profile, optional dump and hive, anti-forensics arm, and ground_truth.tsv.
CorpusLayout generate_corpus(const CorpusSpec& spec, const std::filesystem::path& out_dir,
                             GroundTruth* truth_out = nullptr);

Bytes encode_utf16le(std::string_view ascii, bool nul_terminate = false);

}  // namespace d2wfp::corpus
