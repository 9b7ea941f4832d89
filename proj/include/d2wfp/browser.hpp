#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "d2wfp/artifact.hpp"
#include "d2wfp/bytes.hpp"
#include "d2wfp/error.hpp"

namespace d2wfp::browser {

/// Form field names whose entries count as search queries.
inline constexpr std::array<std::string_view, 4> kSearchFieldNames{"searchbar-history", "q", "query", "search"};

bool is_search_field(std::string_view fieldname) noexcept;

/// Stores found under a Firefox-family profile directory.
struct ProfileLayout {
  std::filesystem::path root;
  std::vector<std::string> stores;  // only those that exist
  bool tor = false;                 // "Tor Browser" in the path or torbutton installed

  bool has(std::string_view store) const;
};

ProfileLayout detect_profile(const std::filesystem::path& root);

struct ExtractOptions {
  std::string evidence_id;
  bool carve = true;        // include deleted SQLite records
  double threshold = 0.5;   // carving plausibility cut-off
  std::string locator_prefix;  // profile path inside the evidence item, if any
};

/// Thrown when a store is damaged; carries what could still be read.
class ExtractionError : public Error {
 public:
  ExtractionError(ErrorCode code, const std::string& message, std::vector<Artifact> partial)
      : Error(code, message), partial_(std::move(partial)) {}

  const std::vector<Artifact>& partial() const noexcept { return partial_; }

 private:
  std::vector<Artifact> partial_;
};

// Each extractor throws Error(StoreAbsent) when its store is missing.
// `warnings`, when given, collects skipped entries and unreadable pages.

std::vector<Artifact> extract_history(const ProfileLayout& profile, const ExtractOptions& options = {},
                                      std::vector<std::string>* warnings = nullptr);
std::vector<Artifact> extract_bookmarks(const ProfileLayout& profile, const ExtractOptions& options = {},
                                        std::vector<std::string>* warnings = nullptr);
std::vector<Artifact> extract_downloads(const ProfileLayout& profile, const ExtractOptions& options = {},
                                        std::vector<std::string>* warnings = nullptr);
std::vector<Artifact> extract_cookies(const ProfileLayout& profile, const ExtractOptions& options = {},
                                      std::vector<std::string>* warnings = nullptr);
std::vector<Artifact> extract_form_history(const ProfileLayout& profile, const ExtractOptions& options = {},
                                           std::vector<std::string>* warnings = nullptr);
/// Malformed JSON or entries raise ExtractionError(ParseError) with the
/// entries that did parse.
std::vector<Artifact> extract_logins(const ProfileLayout& profile, const ExtractOptions& options = {},
                                     std::vector<std::string>* warnings = nullptr);
/// Unparseable entry files are skipped with one warning each.
std::vector<Artifact> extract_cache2(const ProfileLayout& profile, const ExtractOptions& options = {},
                                     std::vector<std::string>* warnings = nullptr);

struct CacheEntryMeta {
  std::string key;
  std::string url;
  std::uint32_t version = 0;
  std::uint32_t fetch_count = 0;
  std::uint32_t last_fetched = 0;   // seconds since the Unix epoch
  std::uint32_t last_modified = 0;
  std::uint32_t frecency = 0;
  std::uint32_t expiration = 0;
  std::uint32_t flags = 0;
  std::vector<std::pair<std::string, std::string>> elements;
};

/// Parses the metadata trailer of a cache2 entry file; Error(Malformed) when
/// the layout does not hold together.
CacheEntryMeta parse_cache2_entry(ByteView file);

/// The request URL inside a cache key such as "a,:https://host/path".
std::string cache_key_url(std::string_view key);

struct ProfileExtraction {
  std::vector<Artifact> artifacts;
  std::vector<std::string> warnings;
  std::vector<std::string> absent;  // stores that were not there
};

/// Runs every extractor; missing stores and damaged stores are not fatal.
ProfileExtraction extract_profile(const ProfileLayout& profile, const ExtractOptions& options = {});

}  // namespace d2wfp::browser
