#include "d2wfp/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <future>

#include <nlohmann/json.hpp>

#include "d2wfp/acquisition.hpp"
#include "d2wfp/browser.hpp"
#include "d2wfp/bytes.hpp"
#include "d2wfp/error.hpp"
#include "d2wfp/memscan.hpp"
#include "d2wfp/registry.hpp"
#include "d2wfp/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace d2wfp {

namespace {

double parse_double(const KeyValue& kv) {
  double v = 0;
  const auto* end = kv.value.data() + kv.value.size();
  const auto [p, ec] = std::from_chars(kv.value.data(), end, v);
  if (ec != std::errc() || p != end)
    throw Error(ErrorCode::Config, "line " + std::to_string(kv.line) + ": " + kv.key + " is not a number");
  return v;
}

std::int64_t parse_int(const KeyValue& kv, std::int64_t lo, std::int64_t hi) {
  std::int64_t v = 0;
  const auto* end = kv.value.data() + kv.value.size();
  const auto [p, ec] = std::from_chars(kv.value.data(), end, v);
  if (ec != std::errc() || p != end || v < lo || v > hi)
    throw Error(ErrorCode::Config, "line " + std::to_string(kv.line) + ": " + kv.key + " must be an integer in [" +
                                       std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return v;
}

void log_line(RunResult& r, const LogSink& sink, std::string line) {
  if (sink) sink(line);
  r.log.push_back(std::move(line));
}

void append(std::vector<Artifact>& out, std::vector<Artifact>&& more) {
  out.insert(out.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
}

void append_all(std::vector<std::string>& out, std::vector<std::string>&& more) {
  out.insert(out.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
}

std::vector<Artifact> examine_profile(const fs::path& dir, const browser::ExtractOptions& options,
                                      std::vector<std::string>* warnings) {
  auto ex = browser::extract_profile(browser::detect_profile(dir), options);
  if (warnings)
    for (auto& w : ex.warnings) warnings->push_back(options.evidence_id + ": " + w);
  return std::move(ex.artifacts);
}

std::vector<Artifact> examine_hive(const fs::path& path, const std::string& evidence_id, const std::string& store) {
  const auto hive = registry::parse_hive(read_file(path));
  return registry::hive_artifacts(hive.root, evidence_id, store);
}

json to_json(const Artifact& a) {
  json ts = json::array();
  for (const auto& t : a.timestamps) ts.push_back({t.label, t.at.micros, t.plausible});
  json prov = json::array();
  for (const auto& p : a.provenance)
    prov.push_back({p.evidence_id, p.locator, to_string(p.location), to_string(p.state)});
  json attrs = json::array();
  for (const auto& [k, v] : a.attributes) attrs.push_back({k, v});
  return {{"id", a.artifact_id},
          {"kind", to_string(a.kind)},
          {"category", to_string(a.category)},
          {"location", to_string(a.location)},
          {"state", to_string(a.recovery_state)},
          {"value", a.value},
          {"timestamps", ts},
          {"provenance", prov},
          {"attributes", attrs},
          {"plausibility", a.plausibility ? json(*a.plausibility) : json(nullptr)},
          {"tor", a.tor},
          {"corroboration", a.corroboration}};
}

template <typename T, typename F>
T must(std::optional<T> v, F&& what) {
  if (!v) throw Error(ErrorCode::ParseError, std::string("bad ") + what);
  return *v;
}

Artifact from_json(const json& j) {
  Artifact a;
  a.artifact_id = j.at("id").get<std::string>();
  a.kind = must(parse_artifact_kind(j.at("kind").get<std::string>()), "kind");
  a.category = must(parse_category(j.at("category").get<std::string>()), "category");
  a.location = must(parse_location(j.at("location").get<std::string>()), "location");
  a.recovery_state = must(parse_recovery_state(j.at("state").get<std::string>()), "state");
  a.value = j.at("value").get<std::string>();
  for (const auto& t : j.at("timestamps"))
    a.timestamps.push_back({t.at(0).get<std::string>(), UtcTime{t.at(1).get<std::int64_t>()}, t.at(2).get<bool>()});
  for (const auto& p : j.at("provenance"))
    a.provenance.push_back({p.at(0).get<std::string>(), p.at(1).get<std::string>(),
                            must(parse_location(p.at(2).get<std::string>()), "location"),
                            must(parse_recovery_state(p.at(3).get<std::string>()), "state")});
  for (const auto& kv : j.at("attributes")) a.attributes.emplace_back(kv.at(0).get<std::string>(), kv.at(1).get<std::string>());
  if (!j.at("plausibility").is_null()) a.plausibility = j.at("plausibility").get<double>();
  a.tor = j.at("tor").get<bool>();
  a.corroboration = j.at("corroboration").get<int>();
  return a;
}

}  // namespace

Config parse_config(std::string_view text) {
  Config c;
  for (const auto& kv : parse_key_values(text)) {
    if (kv.key == "workspace") {
      c.workspace = kv.value;
    } else if (kv.key == "threshold") {
      c.threshold = parse_double(kv);
      if (!(c.threshold >= 0.0 && c.threshold <= 1.0))
        throw Error(ErrorCode::Config, "line " + std::to_string(kv.line) + ": threshold must lie in [0, 1]");
    } else if (kv.key == "bucket_seconds") {
      c.bucket_seconds = parse_int(kv, 1, 86400);
    } else if (kv.key == "scan_radius") {
      c.scan_radius = static_cast<std::size_t>(parse_int(kv, 0, 4096));
    } else if (kv.key == "formats") {
      c.formats.clear();
      for (auto part : split(kv.value, ',')) {
        const auto f = reporting::parse_format(trim(part));
        if (!f) throw Error(ErrorCode::Config, "line " + std::to_string(kv.line) + ": unknown format '" +
                                                   std::string(trim(part)) + "'");
        if (std::find(c.formats.begin(), c.formats.end(), *f) == c.formats.end()) c.formats.push_back(*f);
      }
      if (c.formats.empty()) throw Error(ErrorCode::Config, "line " + std::to_string(kv.line) + ": no formats");
    } else {
      throw Error(ErrorCode::Config, "line " + std::to_string(kv.line) + ": unknown key '" + kv.key + "'");
    }
  }
  return c;
}

Config load_config(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw Error(ErrorCode::Config, "cannot read config " + path.string());
  return parse_config(read_text_file(path));
}

std::vector<Artifact> examine_evidence(const EvidenceItem& item, reporting::RunMode mode, const Config& config,
                                       std::vector<std::string>* warnings) {
  const bool full = mode == reporting::RunMode::D2wfp;
  browser::ExtractOptions opts{item.evidence_id, full, config.threshold, {}};
  std::vector<Artifact> out;
  const auto name = item.path.filename().string();

  switch (item.kind) {
    case EvidenceKind::DirectoryTree: {
      const auto tree = ingest_directory(item.path);
      if (warnings)
        for (const auto& e : tree.errors) warnings->push_back(item.evidence_id + ": " + e);
      for (const auto& dir : tree.profile_dirs) {
        const auto rel = fs::relative(dir, item.path).generic_string();
        opts.locator_prefix = rel == "." ? "" : rel + "/";
        append(out, examine_profile(dir, opts, warnings));
      }
      if (!full) break;
      for (const auto& f : tree.files) {
        if (f.kind != EvidenceKind::RegistryHive) continue;
        try {
          append(out, examine_hive(f.path, item.evidence_id, fs::relative(f.path, item.path).generic_string()));
        } catch (const Error& e) {
          if (warnings) warnings->push_back(item.evidence_id + ": " + e.what());
        }
      }
      break;
    }
    case EvidenceKind::SqliteStore: {
      // a lone store is treated as a profile holding just that file
      auto layout = browser::detect_profile(item.path.parent_path());
      if (!layout.has(name)) throw Error(ErrorCode::StoreAbsent, name + " is not a known browser store");
      layout.stores.assign({name});
      auto ex = browser::extract_profile(layout, opts);
      if (warnings)
        for (auto& w : ex.warnings) warnings->push_back(item.evidence_id + ": " + w);
      append(out, std::move(ex.artifacts));
      break;
    }
    case EvidenceKind::CacheStore: {
      fs::path root = item.path;
      if (root.filename() == "entries") root = root.parent_path();
      if (root.filename() == "cache2") root = root.parent_path();
      auto layout = browser::detect_profile(root);
      if (!layout.has("cache2")) throw Error(ErrorCode::StoreAbsent, "no cache2/entries under " + item.path.string());
      layout.stores.assign({"cache2"});
      auto ex = browser::extract_profile(layout, opts);
      if (warnings)
        for (auto& w : ex.warnings) warnings->push_back(item.evidence_id + ": " + w);
      append(out, std::move(ex.artifacts));
      break;
    }
    case EvidenceKind::RegistryHive:
      if (full) append(out, examine_hive(item.path, item.evidence_id, name));
      break;
    case EvidenceKind::MemoryDump:
      if (full) {
        memscan::ScanOptions so;
        so.radius = config.scan_radius;
        append(out, memscan::classify_hits(memscan::scan_file(item.path, {}, so), item.evidence_id, name));
      }
      break;
    case EvidenceKind::OpaqueFile:
      if (warnings) warnings->push_back(item.evidence_id + ": opaque file, nothing to examine");
      break;
  }
  return out;
}

RunResult run_pipeline(Case& c, reporting::RunMode mode, const Config& config, const Clock& clock,
                       const LogSink& sink) {
  RunResult r;
  r.mode = mode;
  if (c.evidence().empty()) throw Error(ErrorCode::EmptyCase, "case " + c.case_id() + " has no evidence");

  // identification
  const auto order = schedule_by_volatility(c.evidence());
  log_line(r, sink, "identify: " + std::to_string(order.size()) + " evidence items, mode " +
                        std::string(reporting::to_string(mode)));

  // preservation: nothing is analysed unless every item still matches its digest
  std::vector<std::string> bad;
  for (const auto& item : order) {
    const bool ok = c.verify_integrity(item.evidence_id, clock);
    log_line(r, sink, "verify: " + item.evidence_id + (ok ? " ok" : " MISMATCH"));
    if (!ok) bad.push_back(item.evidence_id);
  }
  if (!bad.empty()) {
    std::string ids;
    for (const auto& id : bad) ids += (ids.empty() ? "" : ", ") + id;
    throw Error(ErrorCode::IntegrityFailure, "digest mismatch: " + ids);
  }

  // examination: items are extracted concurrently, results consumed in schedule order
  struct Outcome {
    std::vector<Artifact> artifacts;
    std::vector<std::string> warnings;
    std::string failure;
  };
  std::vector<std::future<Outcome>> pending;
  for (const auto& item : order)
    pending.push_back(std::async(std::launch::async, [&item, mode, &config] {
      Outcome o;
      try {
        o.artifacts = examine_evidence(item, mode, config, &o.warnings);
      } catch (const std::exception& e) {
        o.failure = e.what();
      }
      return o;
    }));

  std::vector<Artifact> found;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& item = order[i];
    auto o = pending[i].get();
    log_line(r, sink, "examine: " + item.evidence_id + " level " + std::to_string(item.volatility_level) + " (" +
                          std::string(volatility_name(item.volatility_level)) + ") " +
                          std::string(to_string(item.kind)));
    r.levels.push_back(item.volatility_level);
    append_all(r.warnings, std::move(o.warnings));
    if (o.failure.empty()) {
      log_line(r, sink, "examine: " + item.evidence_id + " " + std::to_string(o.artifacts.size()) + " artifacts");
      append(found, std::move(o.artifacts));
    } else {
      r.warnings.push_back(item.evidence_id + ": " + o.failure);
      log_line(r, sink, "examine: " + item.evidence_id + " failed: " + o.failure);
    }
    c.record_action(item.evidence_id, CustodyAction::Analyzed, clock);
  }

  // correlation
  auto dedup = correlation::deduplicate(std::move(found), config.bucket_seconds);
  r.artifacts = std::move(dedup.artifacts);
  r.merges = std::move(dedup.merges);
  correlation::cross_validate(r.artifacts);
  r.timeline = correlation::build_timeline(r.artifacts);
  r.counts = reporting::count_by_category(r.artifacts, mode, config.threshold);
  log_line(r, sink, "correlate: " + std::to_string(r.artifacts.size()) + " artifacts after " +
                        std::to_string(r.merges.size()) + " merges, " + std::to_string(r.timeline.events.size()) +
                        " events, " + std::to_string(r.timeline.undated) + " undated");
  return r;
}

std::string serialize_results(const RunResult& r) {
  json arts = json::array();
  for (const auto& a : r.artifacts) arts.push_back(to_json(a));
  json merges = json::array();
  for (const auto& m : r.merges) merges.push_back({{"kept", m.kept}, {"merged", m.merged}});
  json doc = {{"mode", reporting::to_string(r.mode)},
              {"artifacts", arts},
              {"merges", merges},
              {"counts", r.counts},
              {"levels", r.levels},
              {"warnings", r.warnings}};
  return doc.dump(1, '\t', false, json::error_handler_t::replace) + "\n";
}

RunResult parse_results(std::string_view text) {
  const auto doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw Error(ErrorCode::ParseError, "results are not a JSON object");
  RunResult r;
  try {
    r.mode = must(reporting::parse_run_mode(doc.at("mode").get<std::string>()), "mode");
    for (const auto& a : doc.at("artifacts")) r.artifacts.push_back(from_json(a));
    for (const auto& m : doc.at("merges"))
      r.merges.push_back({m.at("kept").get<std::string>(), m.at("merged").get<std::vector<std::string>>()});
    r.counts = doc.at("counts").get<reporting::CategoryCounts>();
    r.levels = doc.at("levels").get<std::vector<int>>();
    r.warnings = doc.at("warnings").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  r.timeline = correlation::build_timeline(r.artifacts);
  return r;
}

fs::path run_dir(const Workspace& ws, const std::string& case_id, reporting::RunMode mode) {
  return ws.case_dir(case_id) / "runs" / std::string(reporting::to_string(mode));
}

reporting::ReportData report_data(const Case& c, const RunResult& r, double threshold) {
  reporting::ReportData d;
  d.kase = &c;
  d.mode = r.mode;
  d.threshold = threshold;
  d.artifacts = r.artifacts;
  d.timeline = r.timeline;
  d.merges = r.merges;
  return d;
}

void persist_run(const Workspace& ws, const Case& c, const RunResult& r, const Config& config) {
  const auto dir = run_dir(ws, c.case_id(), r.mode);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string());
  write_text_file(dir / "results.json", serialize_results(r));
  const auto data = report_data(c, r, config.threshold);
  for (auto f : config.formats) reporting::emit_report(data, f, dir / reporting::file_name(f));
  write_text_file(dir / "timeline.csv", reporting::render_timeline_csv(r.timeline));
  std::string log;
  for (const auto& l : r.log) log += l + "\n";
  for (const auto& w : r.warnings) log += "warning: " + w + "\n";
  write_text_file(dir / "pipeline.log", log);
}

}  // namespace d2wfp
