#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "d2wfp/artifact.hpp"
#include "d2wfp/case_model.hpp"
#include "d2wfp/correlation.hpp"

namespace d2wfp::reporting {

enum class RunMode { Regular, D2wfp };

std::string_view to_string(RunMode mode) noexcept;
std::optional<RunMode> parse_run_mode(std::string_view s) noexcept;

enum class Format { Machine, Csv, Html };

std::string_view to_string(Format format) noexcept;
std::optional<Format> parse_format(std::string_view s) noexcept;
std::string_view file_name(Format format) noexcept;  // "report.txt", "report.csv", "report.html"

/// Empty value, every timestamp outside the sanity window, or a carved
/// record scoring under the plausibility threshold.
bool is_excluded(const Artifact& a, double threshold = 0.5);

using CategoryCounts = std::array<std::uint64_t, kAllCategories.size()>;

/// Regular mode counts live FileSystem artifacts only; d2wfp counts
/// everything. Excluded artifacts are never counted.
CategoryCounts count_by_category(const std::vector<Artifact>& artifacts, RunMode mode, double threshold = 0.5);

/// Uplift and ratio of d2wfp over regular, from exact integer arithmetic
/// rounded half to even.
struct Uplift {
  bool defined = false;             // false when regular is zero
  std::int64_t percent_tenths = 0;  // 211 means +21.1%
  std::int64_t ratio_hundredths = 0;

  double percent() const noexcept { return static_cast<double>(percent_tenths) / 10.0; }
  double ratio() const noexcept { return static_cast<double>(ratio_hundredths) / 100.0; }
  std::string percent_text() const;  // "+21.1%", "0.0%", or the undefined mark
  std::string ratio_text() const;    // "1.21"
};

inline constexpr std::string_view kUndefinedMark = "\xe2\x80\x94";  // U+2014

Uplift compute_uplift(std::uint64_t regular, std::uint64_t d2wfp);

/// Integer n/d rounded to nearest, ties to even. d must be positive.
std::int64_t divide_half_even(std::int64_t n, std::int64_t d);

struct TableRow {
  std::string label;
  std::uint64_t regular = 0;
  std::uint64_t d2wfp = 0;
  Uplift uplift;
};

struct CategoryTable {
  std::vector<TableRow> rows;  // five categories in report order
  TableRow total;
};

CategoryTable build_table(const CategoryCounts& regular, const CategoryCounts& d2wfp);

/// Fixed-width text rendering of a category table.
std::string render_table(const CategoryTable& table);

struct ReportData {
  const Case* kase = nullptr;
  RunMode mode = RunMode::D2wfp;
  double threshold = 0.5;
  std::vector<Artifact> artifacts;  // correlated
  correlation::Timeline timeline;
  std::vector<correlation::MergeRecord> merges;
};

/// Byte-deterministic rendering. The custody appendix lists acquisition
/// records; per-run verification and analysis entries stay in the manifest.
std::string render_report(const ReportData& data, Format format);
std::string render_timeline_csv(const correlation::Timeline& timeline);

/// Writes the rendering to `path`; IoError when it cannot.
void emit_report(const ReportData& data, Format format, const std::filesystem::path& path);

}  // namespace d2wfp::reporting
