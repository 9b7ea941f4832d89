#include "d2wfp/correlation.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "d2wfp/bytes.hpp"

namespace d2wfp::correlation {

namespace {

std::optional<UtcTime> earliest(const Artifact& a) {
  std::optional<UtcTime> t;
  for (const auto& ts : a.timestamps)
    if (!t || ts.at < *t) t = ts.at;
  return t;
}

std::int64_t bucket_of(UtcTime t, std::int64_t bucket_seconds) {
  const std::int64_t s = t.seconds();
  // floor, so negative instants bucket like positive ones
  return s >= 0 ? s / bucket_seconds : -((-s + bucket_seconds - 1) / bucket_seconds);
}

int state_rank(RecoveryState s) {
  switch (s) {
    case RecoveryState::Live: return 0;
    case RecoveryState::Carved: return 1;
    case RecoveryState::MemoryResident: return 2;
  }
  return 3;
}

int location_rank(Location l) {
  switch (l) {
    case Location::FileSystem: return 0;
    case Location::UserSystemConfig: return 1;
    case Location::Ram: return 2;
  }
  return 3;
}

auto preference(const Artifact& a) {
  return std::make_tuple(a.timestamps.empty(), state_rank(a.recovery_state), location_rank(a.location),
                         std::cref(a.artifact_id));
}

using ValueKey = std::pair<Category, std::string>;

}  // namespace

std::string normalize_url(std::string_view url) {
  const auto sep = url.find("://");
  if (sep == std::string_view::npos) return std::string(url);
  const auto host_end = url.find_first_of("/?#", sep + 3);
  std::string out = ascii_lower(url.substr(0, host_end == std::string_view::npos ? url.size() : host_end));
  if (host_end != std::string_view::npos) {
    const auto rest = url.substr(host_end);
    out += rest.substr(0, rest.find('#'));
  }
  return out;
}

std::string normalized_value(const Artifact& a) { return normalize_url(a.value); }

DedupResult deduplicate(std::vector<Artifact> artifacts, std::int64_t bucket_seconds) {
  if (bucket_seconds < 1) bucket_seconds = 1;

  // dated groups keyed by (category, value, bucket); std::map keeps buckets ascending
  std::map<ValueKey, std::map<std::int64_t, std::vector<std::size_t>>> dated;
  std::map<ValueKey, std::vector<std::size_t>> undated;
  for (std::size_t i = 0; i < artifacts.size(); ++i) {
    ValueKey key{artifacts[i].category, normalized_value(artifacts[i])};
    if (const auto t = earliest(artifacts[i])) {
      dated[key][bucket_of(*t, bucket_seconds)].push_back(i);
    } else {
      undated[key].push_back(i);
    }
  }

  std::vector<std::vector<std::size_t>> groups;
  for (auto& [key, members] : undated) {
    const auto it = dated.find(key);
    if (it != dated.end()) {
      auto& first = it->second.begin()->second;
      first.insert(first.end(), members.begin(), members.end());
    } else {
      groups.push_back(std::move(members));
    }
  }
  for (auto& [key, buckets] : dated)
    for (auto& [b, members] : buckets) groups.push_back(std::move(members));

  DedupResult out;
  for (auto& members : groups) {
    std::sort(members.begin(), members.end(),
              [&](std::size_t x, std::size_t y) { return preference(artifacts[x]) < preference(artifacts[y]); });
    Artifact rep = std::move(artifacts[members.front()]);
    if (members.size() > 1) {
      MergeRecord m{rep.artifact_id, {}};
      std::set<Provenance> provs(rep.provenance.begin(), rep.provenance.end());
      for (std::size_t k = 1; k < members.size(); ++k) {
        auto& other = artifacts[members[k]];
        m.merged.push_back(other.artifact_id);
        provs.insert(other.provenance.begin(), other.provenance.end());
        rep.tor = rep.tor || other.tor;
      }
      rep.provenance.assign(provs.begin(), provs.end());
      std::sort(m.merged.begin(), m.merged.end());
      out.merges.push_back(std::move(m));
    }
    out.artifacts.push_back(std::move(rep));
  }
  std::sort(out.artifacts.begin(), out.artifacts.end(),
            [](const Artifact& a, const Artifact& b) { return a.artifact_id < b.artifact_id; });
  std::sort(out.merges.begin(), out.merges.end(),
            [](const MergeRecord& a, const MergeRecord& b) { return a.kept < b.kept; });
  return out;
}

void cross_validate(std::vector<Artifact>& artifacts) {
  for (auto& a : artifacts) {
    std::set<Location> seen;
    for (const auto& p : a.provenance) seen.insert(p.location);
    a.corroboration = std::max<int>(1, static_cast<int>(seen.size()));
  }
}

std::string_view to_string(EventKind kind) noexcept {
  switch (kind) {
    case EventKind::Visit: return "visit";
    case EventKind::Download: return "download";
    case EventKind::CookieSet: return "cookie-set";
    case EventKind::FormEntry: return "form-entry";
    case EventKind::LoginSaved: return "login-saved";
    case EventKind::ProgramRun: return "program-run";
    case EventKind::CacheFetch: return "cache-fetch";
  }
  return "?";
}

EventKind event_kind_for(const Artifact& a) noexcept {
  if (a.kind == ArtifactKind::Cookies) return EventKind::CookieSet;
  switch (a.category) {
    case Category::BrowsingHistory: return EventKind::Visit;
    case Category::Downloads: return EventKind::Download;
    case Category::SqliteDbForm: return EventKind::FormEntry;
    case Category::CacheTemp: return EventKind::CacheFetch;
    case Category::SecurityLogins:
      return a.kind == ArtifactKind::UsageSession ? EventKind::ProgramRun : EventKind::LoginSaved;
  }
  return EventKind::Visit;
}

Timeline build_timeline(const std::vector<Artifact>& artifacts) {
  Timeline t;
  for (const auto& a : artifacts) {
    if (a.timestamps.empty()) {
      ++t.undated;
      continue;
    }
    for (const auto& ts : a.timestamps)
      t.events.push_back({ts.at, event_kind_for(a), ts.label, {a.artifact_id}, a.corroboration, ts.plausible});
  }
  std::sort(t.events.begin(), t.events.end(), [](const TimelineEvent& x, const TimelineEvent& y) {
    return std::make_tuple(x.at, to_string(x.kind), std::cref(x.artifact_ids), std::cref(x.label)) <
           std::make_tuple(y.at, to_string(y.kind), std::cref(y.artifact_ids), std::cref(y.label));
  });
  return t;
}

}  // namespace d2wfp::correlation
