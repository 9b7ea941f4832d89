#include "d2wfp/artifact.hpp"

#include <algorithm>

#include "d2wfp/digest.hpp"

namespace d2wfp {

namespace {

constexpr std::string_view kKinds[] = {"URLs",          "Website Content", "Search Queries",
                                       "Bookmarks",     "Cookies",         "Email Addresses",
                                       "Email Content", "Usernames",       "Passwords",
                                       "Download Files", "Usage/Session",  "Timestamps"};
constexpr std::string_view kCategories[] = {"BROWSING_HISTORY", "SECURITY_LOGINS", "CACHE_TEMP",
                                            "SQLITE_DB_FORM", "DOWNLOADS"};
constexpr std::string_view kCategoryDisplay[] = {"BROWSING HISTORY", "SECURITY & LOGINS",
                                                 "CACHE & TEMP", "SQLITE DB FORM", "DOWNLOADS"};
constexpr std::string_view kLocations[] = {"FileSystem", "RAM", "UserSystemConfig"};
constexpr std::string_view kStates[] = {"live", "carved", "memory-resident"};

// rows follow ArtifactKind; columns FileSystem, RAM, UserSystemConfig
constexpr bool kMatrix[12][3] = {
    {false, true, true},   // URLs
    {false, true, false},  // Website Content
    {false, true, true},   // Search Queries
    {true, true, true},    // Bookmarks
    {false, false, false}, // Cookies
    {false, true, false},  // Email Addresses
    {false, true, false},  // Email Content
    {false, true, false},  // Usernames
    {false, true, false},  // Passwords
    {true, true, false},   // Download Files
    {false, true, true},   // Usage/Session
    {true, false, true},   // Timestamps
};

template <typename E, std::size_t N>
std::optional<E> lookup(const std::string_view (&names)[N], std::string_view s) {
  for (std::size_t i = 0; i < N; ++i)
    if (names[i] == s) return static_cast<E>(i);
  return std::nullopt;
}

}  // namespace

std::string_view to_string(ArtifactKind k) noexcept { return kKinds[static_cast<int>(k)]; }
std::string_view to_string(Category c) noexcept { return kCategories[static_cast<int>(c)]; }
std::string_view display_name(Category c) noexcept { return kCategoryDisplay[static_cast<int>(c)]; }
std::string_view to_string(Location l) noexcept { return kLocations[static_cast<int>(l)]; }
std::string_view to_string(RecoveryState s) noexcept { return kStates[static_cast<int>(s)]; }

std::optional<ArtifactKind> parse_artifact_kind(std::string_view s) noexcept { return lookup<ArtifactKind>(kKinds, s); }
std::optional<Category> parse_category(std::string_view s) noexcept { return lookup<Category>(kCategories, s); }
std::optional<Location> parse_location(std::string_view s) noexcept { return lookup<Location>(kLocations, s); }
std::optional<RecoveryState> parse_recovery_state(std::string_view s) noexcept { return lookup<RecoveryState>(kStates, s); }

bool location_matrix_allows(ArtifactKind kind, Location location) noexcept {
  return kMatrix[static_cast<int>(kind)][static_cast<int>(location)];
}

void Artifact::set_attribute(std::string key, std::string val) {
  auto it = std::lower_bound(attributes.begin(), attributes.end(), key,
                             [](const auto& p, const std::string& k) { return p.first < k; });
  if (it != attributes.end() && it->first == key) {
    it->second = std::move(val);
  } else {
    attributes.insert(it, {std::move(key), std::move(val)});
  }
}

const std::string* Artifact::attribute(std::string_view key) const {
  for (const auto& [k, v] : attributes)
    if (k == key) return &v;
  return nullptr;
}

std::string make_artifact_id(std::string_view evidence_id, std::string_view locator) {
  std::string material(evidence_id);
  material.push_back('\0');
  material.append(locator);
  return "A" + sha256_hex(as_bytes(material)).substr(0, 16);
}

Artifact make_artifact(ArtifactKind kind, Category category, Location location, RecoveryState state,
                       std::string value, std::string_view evidence_id, std::string locator) {
  Artifact a;
  a.kind = kind;
  a.category = category;
  a.location = location;
  a.recovery_state = state;
  a.value = std::move(value);
  a.artifact_id = make_artifact_id(evidence_id, locator);
  a.provenance.push_back({std::string(evidence_id), std::move(locator), location, state});
  return a;
}

void add_timestamp(Artifact& a, std::string label, UtcTime at) {
  a.timestamps.push_back({std::move(label), at, within_sanity_window(at)});
}

}  // namespace d2wfp
