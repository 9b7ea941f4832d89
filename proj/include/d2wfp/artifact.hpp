#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "d2wfp/time.hpp"

namespace d2wfp {

/// Fine-grained artifact kinds, one per row of the location matrix.
enum class ArtifactKind {
  Urls,
  WebsiteContent,
  SearchQueries,
  Bookmarks,
  Cookies,
  EmailAddresses,
  EmailContent,
  Usernames,
  Passwords,
  DownloadFiles,
  UsageSession,
  Timestamps,
};

/// Reporting categories, in report-table order.
enum class Category { BrowsingHistory, SecurityLogins, CacheTemp, SqliteDbForm, Downloads };

inline constexpr std::array<Category, 5> kAllCategories{
    Category::BrowsingHistory, Category::SecurityLogins, Category::CacheTemp,
    Category::SqliteDbForm, Category::Downloads};

enum class Location { FileSystem, Ram, UserSystemConfig };

enum class RecoveryState { Live, Carved, MemoryResident };

std::string_view to_string(ArtifactKind kind) noexcept;
std::string_view to_string(Category category) noexcept;
std::string_view display_name(Category category) noexcept;  // "BROWSING HISTORY"
std::string_view to_string(Location location) noexcept;
std::string_view to_string(RecoveryState state) noexcept;

std::optional<ArtifactKind> parse_artifact_kind(std::string_view s) noexcept;
std::optional<Category> parse_category(std::string_view s) noexcept;
std::optional<Location> parse_location(std::string_view s) noexcept;
std::optional<RecoveryState> parse_recovery_state(std::string_view s) noexcept;

/// Where each kind of browsing artifact can reside (FileSystem, RAM,
/// User/System configuration). Cookies are "No" everywhere in the matrix.
bool location_matrix_allows(ArtifactKind kind, Location location) noexcept;

struct LabeledTime {
  std::string label;
  UtcTime at;
  bool plausible = true;

  bool operator==(const LabeledTime&) const = default;
};

struct Provenance {
  std::string evidence_id;
  std::string locator;  // store path plus row / page / offset
  Location location = Location::FileSystem;
  RecoveryState state = RecoveryState::Live;

  bool operator==(const Provenance&) const = default;
  auto operator<=>(const Provenance&) const = default;
};

struct Artifact {
  std::string artifact_id;
  ArtifactKind kind = ArtifactKind::Urls;
  Category category = Category::BrowsingHistory;
  Location location = Location::FileSystem;
  RecoveryState recovery_state = RecoveryState::Live;
  std::string value;
  std::vector<LabeledTime> timestamps;
  std::vector<Provenance> provenance;
  std::vector<std::pair<std::string, std::string>> attributes;  // sorted by key
  std::optional<double> plausibility;  // carved records only
  bool tor = false;
  int corroboration = 1;

  void set_attribute(std::string key, std::string value);
  const std::string* attribute(std::string_view key) const;
  bool operator==(const Artifact&) const = default;
};

/// Deterministic id derived from where the artifact was found.
std::string make_artifact_id(std::string_view evidence_id, std::string_view locator);

/// Builds an artifact with a single provenance entry and a derived id.
Artifact make_artifact(ArtifactKind kind, Category category, Location location, RecoveryState state,
                       std::string value, std::string_view evidence_id, std::string locator);

/// Adds a timestamp, flagging values outside the sanity window.
void add_timestamp(Artifact& a, std::string label, UtcTime at);

}  // namespace d2wfp
