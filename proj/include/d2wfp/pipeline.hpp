#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "d2wfp/case_model.hpp"
#include "d2wfp/correlation.hpp"
#include "d2wfp/reporting.hpp"

namespace d2wfp {

/// Tunables shared by the command line and the pipeline.
struct Config {
  std::filesystem::path workspace;  // empty: taken from the environment or the default
  double threshold = 0.5;           // carving plausibility, [0, 1]
  std::int64_t bucket_seconds = 1;  // dedup bucket, [1, 86400]
  std::size_t scan_radius = 64;     // memory hit context, [0, 4096]
  std::vector<reporting::Format> formats{reporting::Format::Machine};
};

/// key = value lines; unknown keys and out-of-range values raise Error(Config).
Config parse_config(std::string_view text);
Config load_config(const std::filesystem::path& path);

inline constexpr const char* kWorkspaceEnv = "D2WFP_WORKSPACE";

struct RunResult {
  reporting::RunMode mode = reporting::RunMode::D2wfp;
  std::vector<Artifact> artifacts;  // deduplicated and cross-validated
  std::vector<correlation::MergeRecord> merges;
  correlation::Timeline timeline;
  reporting::CategoryCounts counts{};  // for the selected mode
  std::vector<int> levels;             // volatility level of each item, in processing order
  std::vector<std::string> log;
  std::vector<std::string> warnings;
};

using LogSink = std::function<void(const std::string&)>;

/// Identification, preservation, examination and presentation for every
/// evidence item of the case, most volatile first. Integrity is verified
/// before any analysis: a mismatch raises Error(IntegrityFailure); a case
/// without evidence raises Error(EmptyCase). Custody records are appended
/// to `c`; the caller persists it.
RunResult run_pipeline(Case& c, reporting::RunMode mode, const Config& config, const Clock& clock = system_now,
                       const LogSink& sink = {});

/// Artifacts found in one evidence item, before correlation.
std::vector<Artifact> examine_evidence(const EvidenceItem& item, reporting::RunMode mode, const Config& config,
                                       std::vector<std::string>* warnings = nullptr);

/// Results persisted under the case directory so reports can be re-rendered.
std::string serialize_results(const RunResult& r);
RunResult parse_results(std::string_view text);

std::filesystem::path run_dir(const Workspace& ws, const std::string& case_id, reporting::RunMode mode);

/// Writes results.json, the configured report formats and timeline.csv.
void persist_run(const Workspace& ws, const Case& c, const RunResult& r, const Config& config);

reporting::ReportData report_data(const Case& c, const RunResult& r, double threshold);

}  // namespace d2wfp
