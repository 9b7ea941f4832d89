#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "d2wfp/time.hpp"

namespace d2wfp {

enum class EvidenceKind { DirectoryTree, SqliteStore, RegistryHive, MemoryDump, CacheStore, OpaqueFile };

std::string_view to_string(EvidenceKind kind) noexcept;
std::optional<EvidenceKind> parse_evidence_kind(std::string_view text) noexcept;

struct EvidenceItem {
  std::string evidence_id;
  EvidenceKind kind = EvidenceKind::OpaqueFile;
  std::filesystem::path path;
  std::uint64_t size_bytes = 0;
  std::string sha256;
  UtcTime acquired_at;
  int volatility_level = 8;

  bool operator==(const EvidenceItem&) const = default;
};

enum class CustodyAction { Acquired, Verified, Analyzed, Exported };

std::string_view to_string(CustodyAction action) noexcept;
std::optional<CustodyAction> parse_custody_action(std::string_view text) noexcept;

struct CustodyRecord {
  std::uint64_t seq = 0;  // position in the append-only log
  std::string evidence_id;
  CustodyAction action = CustodyAction::Acquired;
  std::string actor;
  UtcTime at;
  std::string digest_at_action;

  bool operator==(const CustodyRecord&) const = default;
};

using Clock = std::function<UtcTime()>;

/// Wall clock with microsecond resolution.
UtcTime system_now();

/// Case container with an append-only custody log. Evidence content is only
/// ever read, never written.
class Case {
 public:
  Case(std::string case_id, std::string examiner, UtcTime created_at);

  const std::string& case_id() const noexcept { return case_id_; }
  const std::string& examiner() const noexcept { return examiner_; }
  UtcTime created_at() const noexcept { return created_at_; }
  const std::vector<EvidenceItem>& evidence() const noexcept { return evidence_; }
  const std::vector<CustodyRecord>& custody_log() const noexcept { return custody_; }

  /// Hashes the content at `path` and appends an `acquired` custody record.
  /// Throws IoError for unreadable paths and InvalidVolatility outside 1..10.
  const EvidenceItem& register_evidence(const std::filesystem::path& path, EvidenceKind kind,
                                        int volatility_level, const Clock& clock = system_now);

  /// Recomputes the digest and appends a `verified` record whatever the outcome.
  bool verify_integrity(std::string_view evidence_id, const Clock& clock = system_now);

  /// Appends an `analyzed` or `exported` record carrying the registered digest.
  void record_action(std::string_view evidence_id, CustodyAction action,
                     const Clock& clock = system_now);

  const EvidenceItem& find_evidence(std::string_view evidence_id) const;

  /// Deterministic line-oriented manifest: tab-separated, sorted lines.
  std::string serialize() const;
  static Case parse(std::string_view manifest);

 private:
  void append(std::string_view evidence_id, CustodyAction action, std::string digest,
              const Clock& clock);

  std::string case_id_;
  std::string examiner_;
  UtcTime created_at_;
  std::vector<EvidenceItem> evidence_;
  std::vector<CustodyRecord> custody_;
};

/// A directory holding one manifest per case under `cases/<case_id>/`.
class Workspace {
 public:
  explicit Workspace(std::filesystem::path root, Clock clock = system_now);

  const std::filesystem::path& root() const noexcept { return root_; }
  const Clock& clock() const noexcept { return clock_; }

  /// Creates and persists an empty case. Throws EmptyId or DuplicateCase.
  Case open_case(const std::string& case_id, const std::string& examiner);
  Case load(const std::string& case_id) const;
  void save(const Case& c) const;
  bool has_case(const std::string& case_id) const;
  std::vector<std::string> case_ids() const;

  std::filesystem::path case_dir(const std::string& case_id) const;
  std::filesystem::path manifest_path(const std::string& case_id) const;

 private:
  std::filesystem::path root_;
  Clock clock_;
};

}  // namespace d2wfp
