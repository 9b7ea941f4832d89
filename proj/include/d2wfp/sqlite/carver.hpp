#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "d2wfp/sqlite/database.hpp"

namespace d2wfp::sqlite {

enum class CarveOrigin { FreelistPage, Freeblock, Unallocated };

std::string_view to_string(CarveOrigin origin) noexcept;

/// A deleted record reconstructed from space no longer referenced by the b-tree.
struct CarvedRecord {
  CarveOrigin origin = CarveOrigin::Unallocated;
  std::uint32_t page = 0;    // 0 for sidecar sources
  std::uint32_t offset = 0;  // byte offset within the page (or sidecar file)
  std::string source = "main";  // "main", "wal" or "journal"
  std::string table_name;       // best-matching live shape; empty when none fits
  std::optional<std::int64_t> rowid;
  std::vector<Value> columns;
  std::vector<bool> decoded;    // false where a column could not be recovered
  bool complete = true;
  double plausibility = 0.0;
};

struct CarveOptions {
  double threshold = 0.5;  // candidates scoring below are dropped
};

struct CarveResult {
  std::vector<CarvedRecord> records;
  std::size_t skipped_pages = 0;  // unreadable pages, reported as warnings
  std::size_t rejected = 0;       // structurally valid candidates below threshold
};

/// Fraction of informative columns that look genuine: printable UTF-8 text,
/// integers that are in-window timestamps or small counters, finite reals,
/// blobs where the column expects them. NULLs carry no evidence and are not
/// counted; undecoded columns count against the score.
double plausibility_score(const std::vector<Value>& columns, const std::vector<bool>& decoded,
                          const TableShape* shape = nullptr);

/// Records left on freelist trunk and leaf pages.
CarveResult carve_freelist(const Database& db, const CarveOptions& options = {});

/// Records in the unallocated gap and freeblock chains of in-use table leaves.
CarveResult carve_unallocated(const Database& db, const CarveOptions& options = {});

/// Raw scan of -wal / -journal sidecars for intact cells.
CarveResult carve_sidecars(const Database& db, const CarveOptions& options = {});

/// All three sources, with duplicates of live rows and of each other removed.
CarveResult carve_all(const Database& db, const CarveOptions& options = {});

}  // namespace d2wfp::sqlite
