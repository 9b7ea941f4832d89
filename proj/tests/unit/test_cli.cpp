#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "../support.hpp"
#include "d2wfp/cli.hpp"
#include "d2wfp/corpus.hpp"
#include "d2wfp/digest.hpp"
#include "d2wfp/error.hpp"
#include "d2wfp/pipeline.hpp"

using namespace d2wfp;
using testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome cli_in(const fs::path& ws, std::vector<std::string> args) {
  args.insert(args.begin(), {"--workspace", ws.string()});
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

corpus::CorpusLayout small_corpus(const fs::path& dir, std::uint64_t seed = 4) {
  corpus::CorpusSpec spec;
  spec.seed = seed;
  spec.history = 20;
  spec.cookies = 8;
  spec.forms = 6;
  spec.downloads = 5;
  spec.logins = 3;
  spec.cache = 6;
  spec.anti_forensics = corpus::AntiForensics::DeleteRows;
  spec.memory_size = 1 << 20;
  spec.memory_urls = 4;
  spec.hive = true;
  spec.corroborate = 2;
  return corpus::generate_corpus(spec, dir);
}

ErrorCode config_error(std::string_view text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::Invalid;
}

}  // namespace

TEST_CASE("init creates a manifest and refuses a second case") {
  TempDir dir;
  const auto ws = dir / "ws";
  auto r = cli_in(ws, {"init", "CASE-1", "--examiner", "kim"});
  CHECK(r.code == 0);
  CHECK(fs::exists(ws / "cases" / "CASE-1"));
  CHECK(cli_in(ws, {"init", "CASE-1"}).code == 2);
  CHECK(cli_in(ws, {"init", "CASE-2"}).code == 2);
  CHECK(cli_in(dir / "other", {"init", ""}).code == 2);
  CHECK(cli_in(dir / "none", {"verify"}).code == 2);
  CHECK(cli_in(ws, {"bogus"}).code == 2);
  CHECK(cli_in(ws, {"run", "--mode", "fast"}).code == 2);
}

TEST_CASE("add prints the digest of the evidence") {
  TempDir dir;
  const auto ws = dir / "ws";
  testing::write_bytes(dir / "blob.bin", "abc");
  REQUIRE(cli_in(ws, {"init", "C"}).code == 0);
  const auto r = cli_in(ws, {"add", (dir / "blob.bin").string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad") != std::string::npos);
  CHECK(r.out.find("opaque") != std::string::npos);
  CHECK(cli_in(ws, {"add", (dir / "missing").string()}).code == 1);
  CHECK(cli_in(ws, {"add", (dir / "blob.bin").string(), "--level", "11"}).code == 2);
}

TEST_CASE("running an empty case exits 3") {
  TempDir dir;
  REQUIRE(cli_in(dir / "ws", {"init", "C"}).code == 0);
  CHECK(cli_in(dir / "ws", {"run"}).code == 3);
}

TEST_CASE("full run on a generated corpus") {
  TempDir dir;
  const auto ws = dir / "ws";
  const auto layout = small_corpus(dir / "corpus");
  REQUIRE(cli_in(ws, {"init", "C-7"}).code == 0);
  REQUIRE(cli_in(ws, {"add", layout.profile.string()}).code == 0);
  REQUIRE(cli_in(ws, {"add", layout.memory.string()}).code == 0);
  REQUIRE(cli_in(ws, {"add", layout.hive.string()}).code == 0);
  CHECK(cli_in(ws, {"verify"}).code == 0);

  const auto reg = cli_in(ws, {"run", "--mode", "regular"});
  REQUIRE(reg.code == 0);
  const auto full = cli_in(ws, {"run"});
  REQUIRE(full.code == 0);
  CHECK(full.out.find("summary (d2wfp)") != std::string::npos);

  const auto case_dir = ws / "cases" / "C-7";
  const auto reg_run = parse_results(read_text_file(case_dir / "runs" / "regular" / "results.json"));
  const auto full_run = parse_results(read_text_file(case_dir / "runs" / "d2wfp" / "results.json"));
  std::size_t reg_total = 0, full_total = 0;
  for (std::size_t i = 0; i < reg_run.counts.size(); ++i) {
    CHECK(full_run.counts[i] >= reg_run.counts[i]);
    reg_total += reg_run.counts[i];
    full_total += full_run.counts[i];
  }
  CHECK(full_total > reg_total);
  for (std::size_t i = 1; i < full_run.levels.size(); ++i) CHECK(full_run.levels[i - 1] <= full_run.levels[i]);
  CHECK(full_run.levels.front() == 6);  // memory first

  CHECK(fs::exists(case_dir / "runs" / "d2wfp" / reporting::file_name(reporting::Format::Machine)));
  CHECK(fs::exists(case_dir / "runs" / "d2wfp" / "timeline.csv"));
  CHECK(fs::exists(case_dir / "runs" / "d2wfp" / "pipeline.log"));

  const auto out_path = dir / "r.html";
  const auto rep = cli_in(ws, {"report", "--format", "html", "--out", out_path.string()});
  CHECK(rep.code == 0);
  CHECK(read_text_file(out_path).rfind("<!DOCTYPE html>", 0) == 0);
  CHECK(read_text_file(ws / "cases" / "C-7" / "case.manifest").find("exported") != std::string::npos);

  // machine reports from two runs over the same evidence are identical
  const auto machine = case_dir / "runs" / "d2wfp" / reporting::file_name(reporting::Format::Machine);
  const auto first = read_text_file(machine);
  REQUIRE(cli_in(ws, {"run"}).code == 0);
  CHECK(read_text_file(machine) == first);
}

TEST_CASE("tampered evidence exits 4 before analysis") {
  TempDir dir;
  const auto ws = dir / "ws";
  corpus::CorpusSpec spec;
  spec.hive = true;
  spec.uninstall_names.push_back("Tor Browser");
  const auto layout = corpus::generate_corpus(spec, dir / "corpus");
  REQUIRE(cli_in(ws, {"init", "C"}).code == 0);
  REQUIRE(cli_in(ws, {"add", layout.hive.string()}).code == 0);
  auto bytes = read_text_file(layout.hive);
  bytes[bytes.size() - 1] ^= 0x5a;
  testing::write_bytes(layout.hive, bytes);
  CHECK(cli_in(ws, {"verify"}).code == 4);
  const auto r = cli_in(ws, {"run"});
  CHECK(r.code == 4);
  CHECK(r.out.find("MISMATCH") != std::string::npos);
  CHECK(r.out.find("examine:") == std::string::npos);
  CHECK_FALSE(fs::exists(ws / "cases" / "C" / "runs" / "d2wfp" / "results.json"));
}

TEST_CASE("workspace precedence: flag over environment over config") {
  TempDir dir;
  testing::write_bytes(dir / "cfg", "workspace = " + (dir / "from-config").string() + "\n");
  ::setenv(kWorkspaceEnv, (dir / "from-env").string().c_str(), 1);
  std::ostringstream out, err;
  CHECK(cli::run({"--config", (dir / "cfg").string(), "init", "A"}, out, err) == 0);
  CHECK(fs::exists(dir / "from-env" / "cases" / "A"));
  CHECK(cli::run({"--config", (dir / "cfg").string(), "--workspace", (dir / "from-flag").string(), "init", "B"}, out,
                 err) == 0);
  CHECK(fs::exists(dir / "from-flag" / "cases" / "B"));
  ::unsetenv(kWorkspaceEnv);
  CHECK(cli::run({"--config", (dir / "cfg").string(), "init", "C"}, out, err) == 0);
  CHECK(fs::exists(dir / "from-config" / "cases" / "C"));
  CHECK(cli::run({"--threshold", "1.5", "--workspace", (dir / "t").string(), "init", "T"}, out, err) == 2);
}

TEST_CASE("corpus command") {
  TempDir dir;
  testing::write_bytes(dir / "spec", "seed = 3\nhistory = 5\nmemory_size = 65536\n");
  std::ostringstream out, err;
  CHECK(cli::run({"corpus", (dir / "spec").string(), (dir / "out").string()}, out, err) == 0);
  CHECK(fs::exists(dir / "out" / "ground_truth.tsv"));
  CHECK(fs::exists(dir / "out" / "memory.raw"));
  testing::write_bytes(dir / "bad", "colour = blue\n");
  CHECK(cli::run({"corpus", (dir / "bad").string(), (dir / "out2").string()}, out, err) == 2);
}

TEST_CASE("parse_config") {
  const auto c = parse_config("# comment\nthreshold = 0.75\nbucket_seconds = 60\nscan_radius = 0\nformats = csv, html, csv\n");
  CHECK(c.threshold == 0.75);
  CHECK(c.bucket_seconds == 60);
  CHECK(c.scan_radius == 0);
  CHECK(c.formats == std::vector<reporting::Format>{reporting::Format::Csv, reporting::Format::Html});
  const auto d = parse_config("");
  CHECK(d.threshold == 0.5);
  CHECK(d.formats == std::vector<reporting::Format>{reporting::Format::Machine});
  CHECK(config_error("colour = blue\n") == ErrorCode::Config);
  CHECK(config_error("threshold = 1.01\n") == ErrorCode::Config);
  CHECK(config_error("threshold = -0.1\n") == ErrorCode::Config);
  CHECK(config_error("bucket_seconds = 0\n") == ErrorCode::Config);
  CHECK(config_error("bucket_seconds = 86401\n") == ErrorCode::Config);
  CHECK(config_error("scan_radius = 4097\n") == ErrorCode::Config);
  CHECK(config_error("formats = pdf\n") == ErrorCode::Config);
  CHECK(config_error("threshold\n") == ErrorCode::Config);
  try {
    parse_config("threshold = 0.5\nnope = 1\n");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("results serialization round trips") {
  TempDir dir;
  const auto layout = small_corpus(dir / "c", 9);
  Workspace ws(dir / "ws");
  auto c = ws.open_case("R", "e");
  c.register_evidence(layout.profile, EvidenceKind::DirectoryTree, 8, ws.clock());
  c.register_evidence(layout.memory, EvidenceKind::MemoryDump, 2, ws.clock());
  Config config;
  const auto r = run_pipeline(c, reporting::RunMode::D2wfp, config, ws.clock());
  const auto text = serialize_results(r);
  const auto back = parse_results(text);
  CHECK(back.artifacts == r.artifacts);
  CHECK(back.counts == r.counts);
  CHECK(back.levels == r.levels);
  CHECK(back.timeline.events.size() == r.timeline.events.size());
  CHECK(serialize_results(back) == text);
}

TEST_CASE("order of volatility on random evidence sets") {
  std::mt19937_64 rng(8);
  TempDir dir;
  testing::write_bytes(dir / "f", "x");
  const EvidenceKind kinds[] = {EvidenceKind::OpaqueFile, EvidenceKind::MemoryDump, EvidenceKind::RegistryHive};
  for (int round = 0; round < 20; ++round) {
    Workspace ws(dir / ("ws" + std::to_string(round)));
    auto c = ws.open_case("O", "e");
    const int n = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i)
      c.register_evidence(dir / "f", kinds[rng() % 3], 1 + static_cast<int>(rng() % 10), ws.clock());
    const auto r = run_pipeline(c, reporting::RunMode::Regular, Config{}, ws.clock());
    REQUIRE(r.levels.size() == static_cast<std::size_t>(n));
    for (std::size_t i = 1; i < r.levels.size(); ++i) CHECK(r.levels[i - 1] <= r.levels[i]);
  }
}

TEST_CASE("a mislabelled item is reported, not fatal") {
  TempDir dir;
  testing::write_bytes(dir / "f", "plain");
  Workspace ws(dir / "ws");
  auto c = ws.open_case("M", "e");
  c.register_evidence(dir / "f", EvidenceKind::CacheStore, 7, ws.clock());
  c.register_evidence(dir / "f", EvidenceKind::SqliteStore, 8, ws.clock());
  const auto r = run_pipeline(c, reporting::RunMode::D2wfp, Config{}, ws.clock());
  CHECK(r.artifacts.empty());
  CHECK(r.warnings.size() == 2);
}
