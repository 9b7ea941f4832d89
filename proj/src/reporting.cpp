#include "d2wfp/reporting.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "d2wfp/bytes.hpp"
#include "d2wfp/error.hpp"
#include "d2wfp/text.hpp"

namespace d2wfp::reporting {

namespace {

std::string fixed(std::int64_t scaled, int decimals) {
  const bool neg = scaled < 0;
  std::uint64_t v = neg ? static_cast<std::uint64_t>(-(scaled + 1)) + 1 : static_cast<std::uint64_t>(scaled);
  std::uint64_t scale = 1;
  for (int i = 0; i < decimals; ++i) scale *= 10;
  std::string frac = std::to_string(v % scale);
  frac.insert(0, static_cast<std::size_t>(decimals) - frac.size(), '0');
  return (neg ? "-" : "") + std::to_string(v / scale) + "." + frac;
}

std::string format_threshold(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", t);
  return buf;
}

std::string timestamps_field(const Artifact& a) {
  std::string out;
  for (const auto& t : a.timestamps) {
    if (!out.empty()) out += ';';
    out += t.label + "=" + format_iso8601_micros(t.at);
    if (!t.plausible) out += "!";
  }
  return out;
}

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) out += (out.empty() ? "" : ",") + id;
  return out;
}

// Only acquisition records are stable across runs of the same case.
std::vector<CustodyRecord> custody_appendix(const Case& c) {
  std::vector<CustodyRecord> out;
  for (const auto& r : c.custody_log())
    if (r.action == CustodyAction::Acquired) out.push_back(r);
  return out;
}

std::vector<EvidenceItem> sorted_evidence(const Case& c) {
  auto ev = c.evidence();
  std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) { return a.evidence_id < b.evidence_id; });
  return ev;
}

CategoryTable table_for(const ReportData& d) {
  return build_table(count_by_category(d.artifacts, RunMode::Regular, d.threshold),
                     count_by_category(d.artifacts, RunMode::D2wfp, d.threshold));
}

std::string render_machine(const ReportData& d) {
  std::ostringstream o;
  const auto& c = *d.kase;
  o << "d2wfp-report\t1\n";
  o << "case_id\t" << escape_field(c.case_id()) << "\n";
  o << "examiner\t" << escape_field(c.examiner()) << "\n";
  o << "created_at\t" << format_iso8601_micros(c.created_at()) << "\n";
  o << "mode\t" << to_string(d.mode) << "\n";
  o << "threshold\t" << format_threshold(d.threshold) << "\n";
  o << "artifacts\t" << d.artifacts.size() << "\n";
  o << "events\t" << d.timeline.events.size() << "\n";
  o << "undated\t" << d.timeline.undated << "\n";
  o << "merges\t" << d.merges.size() << "\n";

  o << "\n[evidence]\n";
  for (const auto& e : sorted_evidence(c))
    o << e.evidence_id << '\t' << to_string(e.kind) << '\t' << e.volatility_level << '\t' << e.sha256 << '\t'
      << e.size_bytes << '\t' << escape_field(e.path.generic_string()) << "\n";

  o << "\n[categories]\n";
  const auto table = table_for(d);
  auto row = [&](std::string_view label, const TableRow& r) {
    o << label << "\tregular=" << r.regular << "\td2wfp=" << r.d2wfp << "\tuplift=" << r.uplift.percent_text()
      << "\tratio=" << (r.uplift.defined ? r.uplift.ratio_text() : std::string(kUndefinedMark)) << "\n";
  };
  for (std::size_t i = 0; i < kAllCategories.size(); ++i) row(to_string(kAllCategories[i]), table.rows[i]);
  row("TOTAL", table.total);

  o << "\n[artifacts]\n";
  auto arts = d.artifacts;
  std::sort(arts.begin(), arts.end(), [](const auto& a, const auto& b) { return a.artifact_id < b.artifact_id; });
  for (const auto& a : arts) {
    o << a.artifact_id << '\t' << to_string(a.category) << '\t' << to_string(a.kind) << '\t'
      << to_string(a.recovery_state) << '\t' << to_string(a.location) << '\t' << a.corroboration << '\t'
      << (a.tor ? "tor" : "-") << '\t' << (is_excluded(a, d.threshold) ? "excluded" : "counted") << '\t'
      << a.provenance.size() << '\t' << escape_field(timestamps_field(a)) << '\t' << escape_field(a.value) << "\n";
  }

  o << "\n[merges]\n";
  for (const auto& m : d.merges) o << m.kept << '\t' << join_ids(m.merged) << "\n";

  o << "\n[timeline]\n";
  for (const auto& e : d.timeline.events)
    o << format_iso8601_micros(e.at) << '\t' << correlation::to_string(e.kind) << '\t' << e.label << '\t'
      << join_ids(e.artifact_ids) << '\t' << e.corroboration << (e.plausible ? "" : "\timplausible") << "\n";

  o << "\n[custody]\n";
  for (const auto& r : custody_appendix(c))
    o << r.seq << '\t' << r.evidence_id << '\t' << to_string(r.action) << '\t' << escape_field(r.actor) << '\t'
      << format_iso8601_micros(r.at) << '\t' << r.digest_at_action << "\n";

  o << "\n[recommendations]\n";
  o << "request-further-data\tISP and web server records, if applicable\n";
  return o.str();
}

std::string render_csv(const ReportData& d) {
  std::ostringstream o;
  o << "category,regular,d2wfp,uplift_percent,ratio\r\n";
  const auto table = table_for(d);
  auto row = [&](std::string_view label, const TableRow& r) {
    o << csv_field(label) << ',' << r.regular << ',' << r.d2wfp << ',' << csv_field(r.uplift.percent_text()) << ','
      << csv_field(r.uplift.defined ? r.uplift.ratio_text() : std::string(kUndefinedMark)) << "\r\n";
  };
  for (std::size_t i = 0; i < kAllCategories.size(); ++i) row(display_name(kAllCategories[i]), table.rows[i]);
  row("TOTAL", table.total);
  return o.str();
}

std::string render_html(const ReportData& d) {
  std::ostringstream o;
  const auto& c = *d.kase;
  const auto table = table_for(d);
  o << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n"
    << "<title>Case " << html_escape(c.case_id()) << "</title>\n"
    << "<style>body{font-family:sans-serif;margin:2em}table{border-collapse:collapse;margin-bottom:1.5em}"
       "td,th{border:1px solid #999;padding:.25em .6em;text-align:left}td.n{text-align:right}"
       "tr.total td{font-weight:bold}.carved{color:#8a4b00}.memory-resident{color:#00538a}</style>\n"
    << "</head>\n<body>\n";
  o << "<h1>Browsing artifact report: case " << html_escape(c.case_id()) << "</h1>\n";
  o << "<p>Examiner: " << html_escape(c.examiner()) << "<br>Case opened: " << format_iso8601(c.created_at())
    << "<br>Mode: " << to_string(d.mode) << "<br>Artifacts: " << d.artifacts.size()
    << "<br>Timeline events: " << d.timeline.events.size() << " (" << d.timeline.undated
    << " artifacts without a time)</p>\n";

  o << "<h2>Findings by category</h2>\n<table>\n<tr><th>Category</th><th>Regular</th><th>Full protocol</th>"
       "<th>Uplift</th><th>Ratio</th></tr>\n";
  auto row = [&](std::string_view label, const TableRow& r, bool total) {
    o << (total ? "<tr class=\"total\">" : "<tr>") << "<td>" << html_escape(label) << "</td><td class=\"n\">"
      << r.regular << "</td><td class=\"n\">" << r.d2wfp << "</td><td class=\"n\">"
      << html_escape(r.uplift.percent_text()) << "</td><td class=\"n\">"
      << html_escape(r.uplift.defined ? r.uplift.ratio_text() : std::string(kUndefinedMark)) << "</td></tr>\n";
  };
  for (std::size_t i = 0; i < kAllCategories.size(); ++i) row(display_name(kAllCategories[i]), table.rows[i], false);
  row("TOTAL", table.total, true);
  o << "</table>\n";

  o << "<h2>Evidence</h2>\n<table>\n<tr><th>ID</th><th>Kind</th><th>Volatility</th><th>SHA-256</th><th>Path</th></tr>\n";
  for (const auto& e : sorted_evidence(c))
    o << "<tr><td>" << html_escape(e.evidence_id) << "</td><td>" << to_string(e.kind) << "</td><td class=\"n\">"
      << e.volatility_level << "</td><td><code>" << e.sha256 << "</code></td><td>"
      << html_escape(e.path.generic_string()) << "</td></tr>\n";
  o << "</table>\n";

  o << "<h2>Timeline</h2>\n<table>\n<tr><th>Time (UTC)</th><th>Event</th><th>Artifact</th><th>Sources</th></tr>\n";
  std::map<std::string, const Artifact*> by_id;
  for (const auto& a : d.artifacts) by_id[a.artifact_id] = &a;
  for (const auto& e : d.timeline.events) {
    const Artifact* a = e.artifact_ids.empty() ? nullptr : by_id[e.artifact_ids.front()];
    o << "<tr><td>" << format_iso8601(e.at) << "</td><td>" << correlation::to_string(e.kind) << " ("
      << html_escape(e.label) << ")</td><td" << (a ? " class=\"" + std::string(to_string(a->recovery_state)) + "\"" : "")
      << ">" << (a ? html_escape(a->value) : "") << "</td><td class=\"n\">" << e.corroboration << "</td></tr>\n";
  }
  o << "</table>\n";

  o << "<h2>Chain of custody</h2>\n<table>\n<tr><th>#</th><th>Evidence</th><th>Action</th><th>By</th><th>At</th>"
       "<th>Digest</th></tr>\n";
  for (const auto& r : custody_appendix(c))
    o << "<tr><td class=\"n\">" << r.seq << "</td><td>" << html_escape(r.evidence_id) << "</td><td>"
      << to_string(r.action) << "</td><td>" << html_escape(r.actor) << "</td><td>" << format_iso8601(r.at)
      << "</td><td><code>" << r.digest_at_action << "</code></td></tr>\n";
  o << "</table>\n";
  o << "<p>Further data from ISPs and web servers may be requested where applicable.</p>\n</body>\n</html>\n";
  return o.str();
}

}  // namespace

std::string_view to_string(RunMode mode) noexcept { return mode == RunMode::Regular ? "regular" : "d2wfp"; }

std::optional<RunMode> parse_run_mode(std::string_view s) noexcept {
  if (s == "regular") return RunMode::Regular;
  if (s == "d2wfp") return RunMode::D2wfp;
  return std::nullopt;
}

std::string_view to_string(Format format) noexcept {
  switch (format) {
    case Format::Machine: return "machine";
    case Format::Csv: return "csv";
    case Format::Html: return "html";
  }
  return "?";
}

std::optional<Format> parse_format(std::string_view s) noexcept {
  for (auto f : {Format::Machine, Format::Csv, Format::Html})
    if (s == to_string(f)) return f;
  return std::nullopt;
}

std::string_view file_name(Format format) noexcept {
  switch (format) {
    case Format::Machine: return "report.txt";
    case Format::Csv: return "report.csv";
    case Format::Html: return "report.html";
  }
  return "report";
}

bool is_excluded(const Artifact& a, double threshold) {
  if (a.value.empty()) return true;
  if (!a.timestamps.empty() &&
      std::none_of(a.timestamps.begin(), a.timestamps.end(), [](const LabeledTime& t) { return t.plausible; }))
    return true;
  return a.recovery_state == RecoveryState::Carved && a.plausibility && *a.plausibility < threshold;
}

CategoryCounts count_by_category(const std::vector<Artifact>& artifacts, RunMode mode, double threshold) {
  CategoryCounts counts{};
  for (const auto& a : artifacts) {
    if (is_excluded(a, threshold)) continue;
    if (mode == RunMode::Regular && (a.recovery_state != RecoveryState::Live || a.location != Location::FileSystem))
      continue;
    ++counts[static_cast<std::size_t>(a.category)];
  }
  return counts;
}

std::int64_t divide_half_even(std::int64_t n, std::int64_t d) {
  if (d <= 0) throw Error(ErrorCode::Invalid, "divisor must be positive");
  std::int64_t q = n / d;
  std::int64_t r = n % d;
  if (r < 0) {  // floor the quotient so the remainder is non-negative
    q -= 1;
    r += d;
  }
  const std::int64_t twice = 2 * r;
  if (twice > d || (twice == d && (q % 2 != 0))) ++q;
  return q;
}

Uplift compute_uplift(std::uint64_t regular, std::uint64_t d2wfp) {
  Uplift u;
  if (regular == 0) return u;
  const auto r = static_cast<std::int64_t>(regular);
  const auto d = static_cast<std::int64_t>(d2wfp);
  u.defined = true;
  u.percent_tenths = divide_half_even((d - r) * 1000, r);
  u.ratio_hundredths = divide_half_even(d * 100, r);
  return u;
}

std::string Uplift::percent_text() const {
  if (!defined) return std::string(kUndefinedMark);
  return (percent_tenths > 0 ? "+" : "") + fixed(percent_tenths, 1) + "%";
}

std::string Uplift::ratio_text() const {
  if (!defined) return std::string(kUndefinedMark);
  return fixed(ratio_hundredths, 2);
}

CategoryTable build_table(const CategoryCounts& regular, const CategoryCounts& d2wfp) {
  CategoryTable t;
  t.total.label = "TOTAL";
  for (std::size_t i = 0; i < kAllCategories.size(); ++i) {
    t.rows.push_back({std::string(display_name(kAllCategories[i])), regular[i], d2wfp[i],
                      compute_uplift(regular[i], d2wfp[i])});
    t.total.regular += regular[i];
    t.total.d2wfp += d2wfp[i];
  }
  t.total.uplift = compute_uplift(t.total.regular, t.total.d2wfp);
  return t;
}

std::string render_table(const CategoryTable& table) {
  std::ostringstream o;
  char line[160];
  std::snprintf(line, sizeof line, "%-20s %10s %10s %9s %7s\n", "ARTEFACTS", "REGULAR", "D2WFP", "UPLIFT", "RATIO");
  o << line;
  auto row = [&](const TableRow& r) {
    const auto pct = r.uplift.percent_text();
    const auto ratio = r.uplift.defined ? r.uplift.ratio_text() : std::string(kUndefinedMark);
    std::snprintf(line, sizeof line, "%-20s %10llu %10llu %9s %7s\n", r.label.c_str(),
                  static_cast<unsigned long long>(r.regular), static_cast<unsigned long long>(r.d2wfp), pct.c_str(),
                  ratio.c_str());
    o << line;
  };
  for (const auto& r : table.rows) row(r);
  row(table.total);
  return o.str();
}

std::string render_timeline_csv(const correlation::Timeline& timeline) {
  std::ostringstream o;
  o << "time,event,label,artifact_ids,corroboration,plausible\r\n";
  for (const auto& e : timeline.events)
    o << format_iso8601_micros(e.at) << ',' << correlation::to_string(e.kind) << ',' << csv_field(e.label) << ','
      << csv_field(join_ids(e.artifact_ids)) << ',' << e.corroboration << ',' << (e.plausible ? "yes" : "no") << "\r\n";
  return o.str();
}

std::string render_report(const ReportData& data, Format format) {
  if (!data.kase) throw Error(ErrorCode::Invalid, "report needs a case");
  switch (format) {
    case Format::Machine: return render_machine(data);
    case Format::Csv: return render_csv(data);
    case Format::Html: return render_html(data);
  }
  return {};
}

void emit_report(const ReportData& data, Format format, const std::filesystem::path& path) {
  const auto text = render_report(data, format);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

}  // namespace d2wfp::reporting
