#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "d2wfp/bytes.hpp"
#include "d2wfp/case_model.hpp"

namespace d2wfp {

struct SourceSignature {
  EvidenceKind kind;
  std::size_t offset;
  std::string_view magic;
  std::string_view description;
};

/// Content signatures for the magic-bearing kinds. Memory dumps have none.
inline constexpr std::array<SourceSignature, 2> kSourceSignatures{{
    {EvidenceKind::SqliteStore, 0, std::string_view("SQLite format 3\0", 16),
     "SQLite database file"},
    {EvidenceKind::RegistryHive, 0, "regf", "Windows registry hive"},
}};

struct VolatilityLevel {
  int level;
  std::string_view name;
};

/// Order of volatility, most volatile first.
inline constexpr std::array<VolatilityLevel, 10> kVolatilityTable{{
    {1, "Cache and Registers"},
    {2, "Routing tables"},
    {3, "ARP cache"},
    {4, "Process table"},
    {5, "Kernel statistics and modules"},
    {6, "Main memory (RAM)"},
    {7, "Temporary file system"},
    {8, "Secondary memory"},
    {9, "Router configuration"},
    {10, "Network topology"},
}};

std::string_view volatility_name(int level) noexcept;

/// Default level for a source kind: RAM 6, cache/temp trees 7, everything on disk 8.
int default_volatility(EvidenceKind kind) noexcept;

/// Classifies a source by its leading bytes. Never returns MemoryDump: that
/// kind is only ever asserted by the operator.
EvidenceKind detect_source_kind(ByteView first_bytes) noexcept;

/// Stable ascending sort by volatility level.
std::vector<EvidenceItem> schedule_by_volatility(std::vector<EvidenceItem> items);

struct IngestedFile {
  std::filesystem::path path;
  EvidenceKind kind;
};

struct IngestResult {
  std::vector<IngestedFile> files;
  std::vector<std::filesystem::path> profile_dirs;  // directories holding places.sqlite
  std::vector<std::string> errors;                   // unreadable children, non-fatal
};

/// Depth-first walk in lexicographic order. Throws IoError if `root` itself
/// cannot be read.
IngestResult ingest_directory(const std::filesystem::path& root);

}  // namespace d2wfp
