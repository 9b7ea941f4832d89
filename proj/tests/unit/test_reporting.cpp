#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "../support.hpp"
#include "d2wfp/error.hpp"
#include "d2wfp/reporting.hpp"

using namespace d2wfp;
using namespace d2wfp::reporting;
using testing::TempDir;

namespace {

Artifact art(std::string value, Category cat, Location loc, RecoveryState state, std::string locator,
             std::int64_t at_s = 1600000000) {
  auto a = make_artifact(ArtifactKind::Urls, cat, loc, state, std::move(value), "E1", std::move(locator));
  add_timestamp(a, "visit", UtcTime::from_seconds(at_s));
  if (state == RecoveryState::Carved) a.plausibility = 0.9;
  return a;
}

std::vector<std::string> fields(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::string section(const std::string& report, const std::string& name) {
  const auto start = report.find("[" + name + "]\n");
  REQUIRE(start != std::string::npos);
  const auto body = start + name.size() + 3;
  const auto end = report.find("\n\n", body);
  return report.substr(body, end == std::string::npos ? std::string::npos : end - body + 1);
}

}  // namespace

TEST_CASE("compute_uplift on reference counts") {
  // (1325 - 1094) / 1094 = 0.21115..., 4681 / 1126 = 4.1572...
  const auto a = compute_uplift(1094, 1325);
  CHECK(a.defined);
  CHECK(std::abs(a.percent() - 21.1) <= 0.05);
  CHECK(a.percent_text() == "+21.1%");
  CHECK(a.ratio_text() == "1.21");
  const auto b = compute_uplift(1126, 4681);
  CHECK(std::abs(b.ratio() - 4.16) <= 0.005);
  CHECK(b.ratio_text() == "4.16");
  const auto c = compute_uplift(100, 100);
  CHECK(c.percent_text() == "0.0%");
  CHECK(c.ratio_text() == "1.00");
}

TEST_CASE("compute_uplift edge cases") {
  const auto u = compute_uplift(0, 5);
  CHECK_FALSE(u.defined);
  CHECK(u.percent_text() == std::string(kUndefinedMark));
  CHECK(compute_uplift(200, 100).percent_text() == "-50.0%");
}

TEST_CASE("divide_half_even") {
  CHECK(divide_half_even(5, 2) == 2);
  CHECK(divide_half_even(7, 2) == 4);
  CHECK(divide_half_even(-5, 2) == -2);
  CHECK(divide_half_even(-7, 2) == -4);
  CHECK(divide_half_even(10, 4) == 2);
  CHECK(divide_half_even(11, 4) == 3);
  CHECK(divide_half_even(1, 3) == 0);
  CHECK(divide_half_even(2, 3) == 1);
  // 0.25% exactly: 1/400 → 2.5 tenths → 2
  CHECK(compute_uplift(400, 401).percent_tenths == 2);
  CHECK(compute_uplift(400, 403).percent_tenths == 8);  // 7.5 tenths → 8
}

TEST_CASE("rendered table shows the counts verbatim") {
  const CategoryCounts regular{1094, 30, 6732, 227, 106};
  const CategoryCounts d2wfp{1325, 53, 10938, 636, 317};
  const auto table = build_table(regular, d2wfp);
  const auto text = render_table(table);
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  const char* labels[] = {"BROWSING HISTORY", "SECURITY & LOGINS", "CACHE & TEMP", "SQLITE DB FORM", "DOWNLOADS"};
  for (std::size_t i = 0; i < 5; ++i) {
    REQUIRE(std::getline(in, line));
    CHECK(line.rfind(labels[i], 0) == 0);
    const auto f = fields(line);
    REQUIRE(f.size() >= 4);
    CHECK(f[f.size() - 4] == std::to_string(regular[i]));
    CHECK(f[f.size() - 3] == std::to_string(d2wfp[i]));
  }
  CHECK(table.total.regular == 8189);
  CHECK(table.total.d2wfp == 13269);
  CHECK(fields(text.substr(text.find("BROWSING HISTORY"))).at(4) == "+21.1%");
}

TEST_CASE("is_excluded and count_by_category") {
  std::vector<Artifact> v;
  for (int i = 0; i < 10; ++i)
    v.push_back(art("http://live" + std::to_string(i), Category::BrowsingHistory, Location::FileSystem,
                    RecoveryState::Live, "h:" + std::to_string(i)));
  for (int i = 0; i < 4; ++i)
    v.push_back(art("http://gone" + std::to_string(i), Category::BrowsingHistory, Location::FileSystem,
                    RecoveryState::Carved, "c:" + std::to_string(i)));
  CHECK(count_by_category(v, RunMode::Regular)[0] == 10);
  CHECK(count_by_category(v, RunMode::D2wfp)[0] == 14);

  auto weak = art("http://weak", Category::BrowsingHistory, Location::FileSystem, RecoveryState::Carved, "c:9");
  weak.plausibility = 0.3;
  CHECK(is_excluded(weak));
  CHECK_FALSE(is_excluded(weak, 0.25));
  auto empty = art("", Category::BrowsingHistory, Location::FileSystem, RecoveryState::Live, "e");
  CHECK(is_excluded(empty));
  auto old = art("http://old", Category::BrowsingHistory, Location::FileSystem, RecoveryState::Live, "o", 1000);
  CHECK(is_excluded(old));

  const auto none = count_by_category({}, RunMode::D2wfp);
  for (auto n : none) CHECK(n == 0);

  const std::vector<Artifact> ram{art("http://x.onion", Category::BrowsingHistory, Location::Ram,
                                      RecoveryState::MemoryResident, "m@1")};
  CHECK(count_by_category(ram, RunMode::Regular)[0] == 0);
  CHECK(count_by_category(ram, RunMode::D2wfp)[0] == 1);
}

TEST_CASE("machine report") {
  Case c("C-9", "alice", UtcTime::from_seconds(1650000000));
  ReportData d;
  d.kase = &c;
  d.artifacts = {
      art("http://a", Category::BrowsingHistory, Location::FileSystem, RecoveryState::Live, "h:1"),
      art("http://b", Category::BrowsingHistory, Location::FileSystem, RecoveryState::Carved, "c:1"),
      art("user@x.org", Category::CacheTemp, Location::Ram, RecoveryState::MemoryResident, "m@5"),
  };
  d.timeline = correlation::build_timeline(d.artifacts);
  const auto text = render_report(d, Format::Machine);
  CHECK(text == render_report(d, Format::Machine));
  CHECK(text.rfind("d2wfp-report\t1\ncase_id\tC-9\n", 0) == 0);

  const auto cats = section(text, "categories");
  const auto reg = count_by_category(d.artifacts, RunMode::Regular);
  const auto full = count_by_category(d.artifacts, RunMode::D2wfp);
  std::istringstream in(cats);
  std::string line;
  for (std::size_t i = 0; i < 5; ++i) {
    REQUIRE(std::getline(in, line));
    CHECK(line.find("regular=" + std::to_string(reg[i]) + "\t") != std::string::npos);
    CHECK(line.find("d2wfp=" + std::to_string(full[i]) + "\t") != std::string::npos);
  }
  CHECK(section(text, "timeline").size() > 0);
  for (const char* s : {"evidence", "categories", "timeline", "custody"}) CHECK(text.find(std::string("[") + s + "]") != std::string::npos);
}

TEST_CASE("empty case gives a valid report with zeroed tables") {
  Case c("C-0", "bob", UtcTime::from_seconds(1650000000));
  ReportData d;
  d.kase = &c;
  const auto text = render_report(d, Format::Machine);
  const auto cats = section(text, "categories");
  CHECK(cats.find("TOTAL\tregular=0\td2wfp=0\tuplift=" + std::string(kUndefinedMark)) != std::string::npos);
  const auto csv = render_report(d, Format::Csv);
  CHECK(csv.find("TOTAL,0,0,") != std::string::npos);
  const auto html = render_report(d, Format::Html);
  CHECK(html.rfind("<!DOCTYPE html>", 0) == 0);
}

TEST_CASE("csv and html formats") {
  Case c("C-1", "a \"quoted\" name", UtcTime::from_seconds(1650000000));
  ReportData d;
  d.kase = &c;
  d.artifacts = {art("http://x/?a=1,b=<2>", Category::Downloads, Location::FileSystem, RecoveryState::Live, "d:1")};
  d.timeline = correlation::build_timeline(d.artifacts);
  const auto csv = render_report(d, Format::Csv);
  CHECK(csv.find("\r\n") != std::string::npos);
  CHECK(csv.find("DOWNLOADS,1,1,0.0%,1.00\r\n") != std::string::npos);
  const auto html = render_report(d, Format::Html);
  CHECK(html.find("<script") == std::string::npos);
  CHECK(html.find("<link") == std::string::npos);
  CHECK(html.find(" src=") == std::string::npos);
  CHECK(html.find("&lt;2&gt;") != std::string::npos);

  const auto tl = render_timeline_csv(d.timeline);
  CHECK(tl.rfind("time,event,label,artifact_ids,corroboration,plausible\r\n", 0) == 0);
  CHECK(tl.find(",download,visit,") != std::string::npos);
}

TEST_CASE("emit_report writes files and reports unwritable destinations") {
  TempDir dir;
  Case c("C-1", "x", UtcTime::from_seconds(1650000000));
  ReportData d;
  d.kase = &c;
  emit_report(d, Format::Machine, dir / "r.txt");
  CHECK(read_text_file(dir / "r.txt") == render_report(d, Format::Machine));
  CHECK_THROWS_AS(emit_report(d, Format::Machine, dir / "missing/dir/r.txt"), Error);
  CHECK(file_name(Format::Html) == "report.html");
  CHECK(parse_format("csv") == Format::Csv);
  CHECK(parse_run_mode("regular") == RunMode::Regular);
  CHECK_FALSE(parse_run_mode("fast").has_value());
}
