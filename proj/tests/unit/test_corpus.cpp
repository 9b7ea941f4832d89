#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "../support.hpp"
#include "d2wfp/browser.hpp"
#include "d2wfp/corpus.hpp"
#include "d2wfp/error.hpp"
#include "d2wfp/memscan.hpp"
#include "d2wfp/registry.hpp"

using namespace d2wfp;
using namespace d2wfp::corpus;
using testing::TempDir;
namespace fs = std::filesystem;

namespace {

std::map<std::string, std::string> tree_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = read_text_file(e.path());
  return out;
}

std::set<std::string> values_of(const std::vector<Artifact>& arts, ArtifactKind kind) {
  std::set<std::string> out;
  for (const auto& a : arts)
    if (a.kind == kind) out.insert(a.value);
  return out;
}

std::set<std::string> truth_values(const GroundTruth& t, ArtifactKind kind, Expectation e) {
  std::set<std::string> out;
  for (const auto& entry : t.entries)
    if (entry.kind == kind && entry.expect == e) out.insert(entry.value);
  return out;
}

}  // namespace

TEST_CASE("history entries are planted and read back") {
  TempDir dir;
  CorpusSpec spec;
  spec.seed = 2;
  spec.history = 10;
  const auto truth = generate_profile(spec, dir / "p");
  CHECK(truth.count(Category::BrowsingHistory, Expectation::Live) == 10);
  const auto ex = browser::extract_profile(browser::detect_profile(dir / "p"), {"E1"});
  const auto got = values_of(ex.artifacts, ArtifactKind::Urls);
  std::size_t hit = 0;
  for (const auto& v : truth_values(truth, ArtifactKind::Urls, Expectation::Live)) hit += got.count(v);
  CHECK(hit == 10);

  // the oracle engine sees the same ten rows
  testing::Oracle db(dir / "p" / "places.sqlite");
  CHECK(db.rows("SELECT count(*) FROM moz_places").at(0).at(0) == "i:10");
}

TEST_CASE("an all-zero spec gives a valid empty profile") {
  TempDir dir;
  CorpusSpec spec;
  const auto layout = generate_corpus(spec, dir / "c");
  GroundTruth truth = GroundTruth::parse(read_text_file(layout.manifest));
  CHECK(truth.entries.empty());
  const auto ex = browser::extract_profile(browser::detect_profile(layout.profile), {"E1"});
  CHECK(ex.artifacts.empty());
  CHECK(ex.warnings.empty());
  CHECK(layout.memory.empty());
  CHECK(layout.hive.empty());
}

TEST_CASE("generation is deterministic per seed") {
  TempDir dir;
  CorpusSpec spec;
  spec.seed = 77;
  spec.history = spec.cookies = spec.forms = spec.downloads = spec.logins = spec.cache = spec.bookmarks = 15;
  spec.anti_forensics = AntiForensics::DeleteRows;
  spec.memory_size = 1 << 16;
  spec.memory_urls = 3;
  spec.hive = true;
  spec.corroborate = 2;
  generate_corpus(spec, dir / "a");
  generate_corpus(spec, dir / "b");
  CHECK(tree_bytes(dir / "a") == tree_bytes(dir / "b"));
  spec.seed = 78;
  generate_corpus(spec, dir / "c");
  CHECK(tree_bytes(dir / "a") != tree_bytes(dir / "c"));
}

TEST_CASE("delete-rows leaves deleted history carvable") {
  TempDir dir;
  CorpusSpec spec;
  spec.seed = 5;
  spec.history = 10;
  spec.anti_forensics = AntiForensics::DeleteRows;
  GroundTruth truth;
  const auto layout = generate_corpus(spec, dir / "c", &truth);
  const auto live = truth_values(truth, ArtifactKind::Urls, Expectation::Live);
  const auto carvable = truth_values(truth, ArtifactKind::Urls, Expectation::Carvable);
  const auto lost = truth_values(truth, ArtifactKind::Urls, Expectation::Unrecoverable);
  CHECK(live.size() == 6);
  CHECK(carvable.size() + lost.size() == 4);
  CHECK(carvable.size() >= 3);

  testing::Oracle db(layout.profile / "places.sqlite");
  CHECK(db.rows("SELECT count(*) FROM moz_places").at(0).at(0) == "i:6");

  const auto ex = browser::extract_profile(browser::detect_profile(layout.profile), {"E1"});
  std::set<std::string> carved;
  for (const auto& a : ex.artifacts)
    if (a.kind == ArtifactKind::Urls && a.recovery_state == RecoveryState::Carved) carved.insert(a.value);
  for (const auto& v : carvable) CHECK(carved.count(v) == 1);
  CHECK(GroundTruth::parse(read_text_file(layout.manifest)).entries == truth.entries);
}

TEST_CASE("vacuum compacts deleted rows away") {
  TempDir dir;
  CorpusSpec spec;
  spec.seed = 5;
  spec.history = 10;
  spec.anti_forensics = AntiForensics::Vacuum;
  GroundTruth truth;
  const auto layout = generate_corpus(spec, dir / "c", &truth);
  CHECK(truth.count(Category::BrowsingHistory, Expectation::Unrecoverable) == 4);
  CHECK(truth.count(Expectation::Carvable) == 0);
  const auto ex = browser::extract_profile(browser::detect_profile(layout.profile), {"E1"});
  for (const auto& a : ex.artifacts) CHECK(a.recovery_state != RecoveryState::Carved);
}

TEST_CASE("the none arm leaves every entry live") {
  TempDir dir;
  CorpusSpec spec;
  spec.seed = 5;
  spec.history = 10;
  spec.cookies = 4;
  const auto before = generate_profile(spec, dir / "p");
  const auto after = apply_antiforensics(dir / "p", AntiForensics::None, before, spec);
  CHECK(after.entries == before.entries);
  CHECK(after.count(Expectation::Live) == after.entries.size());
}

TEST_CASE("memory plant lands at its offset") {
  TempDir dir;
  CorpusSpec spec;
  spec.memory_size = 1 << 16;
  spec.memory_plants.push_back({"http://expyuzz4wqqyqhjn.onion/", 4096, Encoding::Ascii});
  const auto truth = generate_memory_dump(spec, dir / "m.raw");
  const auto raw = read_text_file(dir / "m.raw");
  CHECK(raw.size() == (1u << 16));
  CHECK(raw.substr(4096, 30) == "http://expyuzz4wqqyqhjn.onion/");
  CHECK(raw.substr(0, 4096) == std::string(4096, '\0'));
  REQUIRE(truth.entries.size() == 1);
  CHECK(truth.entries[0].expect == Expectation::Memory);
  CHECK(truth.entries[0].locator == "@4096:ascii");

  spec.memory_plants.push_back({"x", (1 << 16) - 0, Encoding::Ascii});
  CHECK_THROWS_AS(generate_memory_dump(spec, dir / "bad.raw"), Error);
}

TEST_CASE("hive plants are parsed back") {
  TempDir dir;
  const auto spec = parse_corpus_spec(
      "seed = 1\n"
      "userassist = Tor Browser\\Browser\\firefox.exe | 7 | 2022-05-01T10:00:00Z\n"
      "uninstall = Tor Browser\n");
  CHECK(spec.hive);
  generate_hive(spec, dir / "NTUSER.DAT");
  const auto image = read_file(dir / "NTUSER.DAT");
  const auto ind = registry::find_tor_indicators(registry::parse_hive(image).root);
  bool ua = false;
  for (const auto& i : ind)
    if (i.source == registry::IndicatorSource::UserAssist) {
      ua = true;
      CHECK(i.run_count == 7u);
      CHECK(format_iso8601(*i.last_run) == "2022-05-01T10:00:00Z");
    }
  CHECK(ua);
}

TEST_CASE("spec parsing rejects unknown keys and bad values") {
  CHECK_THROWS_AS(parse_corpus_spec("history = ten\n"), Error);
  CHECK_THROWS_AS(parse_corpus_spec("anti_forensics = shred\n"), Error);
  CHECK_THROWS_AS(parse_corpus_spec("delete_fraction = 2\n"), Error);
  CHECK_THROWS_AS(parse_corpus_spec("colour = blue\n"), Error);
  const auto s = parse_corpus_spec("anti_forensics = vacuum\nmemory_plant = 100 | utf16le | hello\n");
  CHECK(s.anti_forensics == AntiForensics::Vacuum);
  REQUIRE(s.memory_plants.size() == 1);
  CHECK(s.memory_plants[0].encoding == Encoding::Utf16le);
  CHECK(s.memory_plants[0].offset == 100);
}
