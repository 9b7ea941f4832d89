#include "d2wfp/cli.hpp"

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "d2wfp/acquisition.hpp"
#include "d2wfp/bytes.hpp"
#include "d2wfp/case_model.hpp"
#include "d2wfp/corpus.hpp"
#include "d2wfp/error.hpp"
#include "d2wfp/pipeline.hpp"
#include "d2wfp/reporting.hpp"

namespace fs = std::filesystem;

namespace d2wfp::cli {

namespace {

struct Options {
  std::string config_path;
  std::string workspace;
  std::optional<double> threshold;

  std::string case_id;
  std::string examiner = "examiner";

  std::string evidence_path;
  std::string kind;
  int level = 0;

  std::string mode = "d2wfp";
  std::string format;
  std::string out_path;

  std::string spec_path;
  std::string corpus_out;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyId:
    case ErrorCode::DuplicateCase:
    case ErrorCode::InvalidVolatility:
    case ErrorCode::Config:
    case ErrorCode::Invalid:
      return kUsage;
    case ErrorCode::EmptyCase: return kEmptyCase;
    case ErrorCode::IntegrityFailure: return kIntegrity;
    default: return kFailure;
  }
}

Config resolve_config(const Options& o) {
  Config c = o.config_path.empty() ? Config{} : load_config(o.config_path);
  if (o.threshold) {
    if (!(*o.threshold >= 0.0 && *o.threshold <= 1.0))
      throw Error(ErrorCode::Config, "--threshold must lie in [0, 1]");
    c.threshold = *o.threshold;
  }
  if (!o.workspace.empty()) {
    c.workspace = o.workspace;
  } else if (const char* env = std::getenv(kWorkspaceEnv); env && *env) {
    c.workspace = env;
  } else if (c.workspace.empty()) {
    c.workspace = kDefaultWorkspace;
  }
  return c;
}

reporting::RunMode parse_mode(const std::string& s) {
  const auto m = reporting::parse_run_mode(s);
  if (!m) throw UsageError("unknown mode '" + s + "' (expected regular or d2wfp)");
  return *m;
}

// A workspace holds exactly one case.
Case load_sole_case(const Workspace& ws) {
  const auto ids = ws.case_ids();
  if (ids.empty()) throw UsageError("no case in workspace " + ws.root().string() + "; run init first");
  if (ids.size() > 1) throw UsageError("workspace " + ws.root().string() + " holds more than one case");
  return ws.load(ids.front());
}

EvidenceKind infer_kind(const fs::path& path) {
  std::error_code ec;
  if (fs::is_directory(path, ec)) return path.filename() == "cache2" ? EvidenceKind::CacheStore : EvidenceKind::DirectoryTree;
  if (!fs::exists(path, ec)) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  const auto head = read_file_prefix(path, 16);
  const auto kind = detect_source_kind(ByteView(head.data(), head.size()));
  if (kind != EvidenceKind::OpaqueFile) return kind;
  // raw images carry no signature
  auto ext = path.extension().string();
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  for (const char* e : {".raw", ".mem", ".dmp", ".vmem", ".lime"})
    if (ext == e) return EvidenceKind::MemoryDump;
  return kind;
}

int cmd_init(const Options& o, const Config& config, std::ostream& out) {
  Workspace ws(config.workspace);
  if (!ws.case_ids().empty()) throw Error(ErrorCode::DuplicateCase, "workspace " + ws.root().string() + " already holds a case");
  const auto c = ws.open_case(o.case_id, o.examiner);
  out << "case " << c.case_id() << " created at " << ws.manifest_path(c.case_id()).string() << "\n";
  return kOk;
}

int cmd_add(const Options& o, const Config& config, std::ostream& out) {
  Workspace ws(config.workspace);
  auto c = load_sole_case(ws);
  const fs::path path = fs::absolute(o.evidence_path).lexically_normal();
  EvidenceKind kind;
  if (o.kind.empty()) {
    kind = infer_kind(path);
  } else {
    const auto k = parse_evidence_kind(o.kind);
    if (!k) throw UsageError("unknown evidence kind '" + o.kind + "'");
    kind = *k;
  }
  const int level = o.level == 0 ? default_volatility(kind) : o.level;
  const auto& item = c.register_evidence(path, kind, level, ws.clock());
  ws.save(c);
  out << item.evidence_id << "  " << to_string(item.kind) << "  level " << item.volatility_level << "  sha256 "
      << item.sha256 << "\n";
  return kOk;
}

int cmd_verify(const Config& config, std::ostream& out) {
  Workspace ws(config.workspace);
  auto c = load_sole_case(ws);
  if (c.evidence().empty()) throw Error(ErrorCode::EmptyCase, "case " + c.case_id() + " has no evidence");
  bool all = true;
  for (const auto& item : c.evidence()) {
    const bool ok = c.verify_integrity(item.evidence_id, ws.clock());
    out << item.evidence_id << "  " << (ok ? "ok" : "MISMATCH") << "\n";
    all = all && ok;
  }
  ws.save(c);
  return all ? kOk : kIntegrity;
}

int cmd_run(const Options& o, const Config& config, std::ostream& out) {
  Workspace ws(config.workspace);
  auto c = load_sole_case(ws);
  const auto mode = parse_mode(o.mode);
  RunResult r;
  try {
    r = run_pipeline(c, mode, config, ws.clock(), [&out](const std::string& line) { out << line << "\n"; });
  } catch (const Error&) {
    ws.save(c);  // keep the verification records of a failed run
    throw;
  }
  ws.save(c);
  persist_run(ws, c, r, config);
  for (const auto& w : r.warnings) out << "warning: " << w << "\n";
  out << "summary (" << reporting::to_string(mode) << ")\n";
  for (std::size_t i = 0; i < kAllCategories.size(); ++i) {
    const auto name = to_string(kAllCategories[i]);
    out << "  " << name << std::string(name.size() < 22 ? 22 - name.size() : 1, ' ') << r.counts[i] << "\n";
  }
  out << "results in " << run_dir(ws, c.case_id(), mode).string() << "\n";
  return kOk;
}

int cmd_report(const Options& o, const Config& config, std::ostream& out) {
  Workspace ws(config.workspace);
  auto c = load_sole_case(ws);
  const auto mode = parse_mode(o.mode);
  reporting::Format format = config.formats.empty() ? reporting::Format::Machine : config.formats.front();
  if (!o.format.empty()) {
    const auto f = reporting::parse_format(o.format);
    if (!f) throw UsageError("unknown format '" + o.format + "' (expected machine, csv or html)");
    format = *f;
  }
  const auto results = run_dir(ws, c.case_id(), mode) / "results.json";
  std::error_code ec;
  if (!fs::exists(results, ec))
    throw UsageError("no " + std::string(reporting::to_string(mode)) + " run recorded; use run first");
  const auto r = parse_results(read_text_file(results));
  const auto data = report_data(c, r, config.threshold);
  const fs::path dest =
      o.out_path.empty() ? run_dir(ws, c.case_id(), mode) / reporting::file_name(format) : fs::path(o.out_path);
  reporting::emit_report(data, format, dest);
  for (const auto& item : c.evidence()) c.record_action(item.evidence_id, CustodyAction::Exported, ws.clock());
  ws.save(c);
  out << dest.string() << "\n";
  return kOk;
}

int cmd_corpus(const Options& o, std::ostream& out) {
  if (!fs::is_regular_file(o.spec_path)) throw Error(ErrorCode::Config, "cannot read spec " + o.spec_path);
  const auto spec = corpus::parse_corpus_spec(read_text_file(o.spec_path));
  corpus::GroundTruth truth;
  const auto layout = corpus::generate_corpus(spec, o.corpus_out, &truth);
  out << "profile   " << layout.profile.string() << "\n";
  if (!layout.memory.empty()) out << "memory    " << layout.memory.string() << "\n";
  if (!layout.hive.empty()) out << "hive      " << layout.hive.string() << "\n";
  out << "manifest  " << layout.manifest.string() << " (" << truth.entries.size() << " entries)\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Deep and dark web browser forensics: case management, extraction, carving and reporting", "d2wfp"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");
  app.add_option("--config", o.config_path, "Config file of key = value lines")->check(CLI::ExistingFile);
  app.add_option("--workspace", o.workspace, "Workspace root directory");
  app.add_option("--threshold", o.threshold, "Carving plausibility threshold in [0, 1]");
  app.footer(std::string("Workspace precedence: --workspace, then $") + kWorkspaceEnv +
             ", then the config 'workspace' key, then ./" + kDefaultWorkspace +
             ".\nFlags override config values.\n"
             "Config keys: workspace, threshold, bucket_seconds (1..86400), scan_radius (0..4096),\n"
             "formats (comma list of machine, csv, html).\n"
             "Exit codes: 0 ok, 1 failure, 2 usage or config, 3 empty case, 4 integrity failure.");

  auto* init = app.add_subcommand("init", "Create the workspace and its case");
  init->add_option("case_id", o.case_id, "Case identifier")->required();
  init->add_option("--examiner", o.examiner, "Examiner recorded in the custody log");

  auto* add = app.add_subcommand("add", "Register an evidence item and print its SHA-256");
  add->add_option("path", o.evidence_path, "File or directory to register")->required();
  add->add_option("--kind", o.kind, "directory, sqlite, hive, memory, cache or opaque (default: detected)");
  add->add_option("--level", o.level, "Volatility level 1..10 (default: from the kind)");

  app.add_subcommand("verify", "Recompute digests of every evidence item");

  auto* run_cmd = app.add_subcommand("run", "Verify, examine in volatility order, correlate and report");
  run_cmd->add_option("--mode", o.mode, "regular or d2wfp")->capture_default_str();

  auto* report = app.add_subcommand("report", "Render the report of a recorded run");
  report->add_option("--mode", o.mode, "regular or d2wfp")->capture_default_str();
  report->add_option("--format", o.format, "machine, csv or html");
  report->add_option("--out", o.out_path, "Destination file (default: the run directory)");

  auto* corpus_cmd = app.add_subcommand("corpus", "Generate a synthetic evidence corpus with ground truth");
  corpus_cmd->add_option("spec", o.spec_path, "Corpus spec file")->required();
  corpus_cmd->add_option("out", o.corpus_out, "Output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (corpus_cmd->parsed()) return cmd_corpus(o, out);
    const auto config = resolve_config(o);
    if (init->parsed()) return cmd_init(o, config, out);
    if (add->parsed()) return cmd_add(o, config, out);
    if (app.got_subcommand("verify")) return cmd_verify(config, out);
    if (run_cmd->parsed()) return cmd_run(o, config, out);
    if (report->parsed()) return cmd_report(o, config, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace d2wfp::cli
