#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "d2wfp/artifact.hpp"

namespace d2wfp::correlation {

/// Lowercases scheme and host and drops the fragment; path and query are kept.
/// Text without "://" is returned unchanged.
std::string normalize_url(std::string_view url);

/// The form of an artifact value used for duplicate detection.
std::string normalized_value(const Artifact& a);

struct MergeRecord {
  std::string kept;                 // representative artifact id
  std::vector<std::string> merged;  // ids folded into it
};

struct DedupResult {
  std::vector<Artifact> artifacts;  // sorted by artifact id
  std::vector<MergeRecord> merges;
};

/// Merges artifacts sharing (category, normalized value, earliest timestamp
/// bucket). Undated artifacts join the earliest dated group with the same
/// category and value, or each other when there is none. The representative
/// is dated before undated, then live before carved before memory-resident,
/// then FileSystem, UserSystemConfig, RAM; it keeps every provenance.
DedupResult deduplicate(std::vector<Artifact> artifacts, std::int64_t bucket_seconds = 1);

/// Sets corroboration to the number of distinct locations in each
/// artifact's provenance. Never removes anything.
void cross_validate(std::vector<Artifact>& artifacts);

enum class EventKind { Visit, Download, CookieSet, FormEntry, LoginSaved, ProgramRun, CacheFetch };

std::string_view to_string(EventKind kind) noexcept;
EventKind event_kind_for(const Artifact& a) noexcept;

struct TimelineEvent {
  UtcTime at;
  EventKind kind = EventKind::Visit;
  std::string label;  // which timestamp of the artifact this is
  std::vector<std::string> artifact_ids;
  int corroboration = 1;
  bool plausible = true;
};

struct Timeline {
  std::vector<TimelineEvent> events;
  std::size_t undated = 0;  // artifacts without any timestamp
};

/// One event per (artifact, timestamp); ascending time, ties broken by event
/// kind name, then artifact id, then label.
Timeline build_timeline(const std::vector<Artifact>& artifacts);

}  // namespace d2wfp::correlation
