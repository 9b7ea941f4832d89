#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "../support.hpp"
#include "d2wfp/case_model.hpp"
#include "d2wfp/digest.hpp"
#include "d2wfp/error.hpp"

using namespace d2wfp;
using testing::TempDir;
using testing::write_bytes;

namespace {

// digests below were computed with sha256sum / hashlib outside this build
constexpr const char* kEmptySha = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855";
constexpr const char* kTestSha = "9f86d081884c7d659a2feaa0c55ad015a3bf4f1b2b0b822cd15d6c15b0f00a08";
constexpr const char* kAbcSha = "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad";
constexpr const char* kTreeSha = "710de22f3060826a2be435bab47b9af1133c3a08839a1d8f401d499833b7f001";

Clock ticking(std::int64_t start_s) {
  auto t = std::make_shared<std::int64_t>(start_s * 1'000'000);
  return [t] { return UtcTime{(*t)++}; };
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::Invalid;
}

}  // namespace

TEST_CASE("sha256 matches published digests") {
  CHECK(sha256_hex(as_bytes("")) == kEmptySha);
  CHECK(sha256_hex(as_bytes("abc")) == kAbcSha);
  CHECK(sha256_hex(as_bytes("test")) == kTestSha);
}

TEST_CASE("directory digest covers relative paths and file digests") {
  TempDir dir;
  write_bytes(dir / "tree/a", "test");
  write_bytes(dir / "tree/b/c", "");
  CHECK(sha256_path(dir / "tree") == kTreeSha);
  CHECK(path_size(dir / "tree") == 4);
}

TEST_CASE("open_case") {
  TempDir dir;
  Workspace ws(dir.path(), ticking(1'600'000'000));
  const auto c = ws.open_case("C-001", "alice");
  CHECK(c.evidence().empty());
  CHECK(c.custody_log().empty());
  CHECK(c.examiner() == "alice");
  CHECK(ws.has_case("C-001"));
  CHECK(code_of([&] { ws.open_case("", "alice"); }) == ErrorCode::EmptyId);
  CHECK(code_of([&] { ws.open_case("C-001", "bob"); }) == ErrorCode::DuplicateCase);
}

TEST_CASE("register_evidence") {
  TempDir dir;
  write_bytes(dir / "empty.raw", "");
  write_bytes(dir / "four.bin", "test");
  Case c("C-001", "alice", UtcTime::from_seconds(1'600'000'000));

  const auto& a = c.register_evidence(dir / "empty.raw", EvidenceKind::MemoryDump, 6, ticking(1'600'000'100));
  CHECK(a.sha256 == kEmptySha);
  CHECK(a.evidence_id == "E0001");
  CHECK(a.size_bytes == 0);

  const auto& b = c.register_evidence(dir / "four.bin", EvidenceKind::SqliteStore, 8, ticking(1'600'000'200));
  CHECK(b.sha256 == kTestSha);
  CHECK(b.size_bytes == 4);

  CHECK(code_of([&] { c.register_evidence(dir / "four.bin", EvidenceKind::RegistryHive, 11); }) ==
        ErrorCode::InvalidVolatility);
  CHECK(code_of([&] { c.register_evidence(dir / "four.bin", EvidenceKind::RegistryHive, 0); }) ==
        ErrorCode::InvalidVolatility);
  CHECK(code_of([&] { c.register_evidence(dir / "missing", EvidenceKind::OpaqueFile, 8); }) ==
        ErrorCode::IoError);

  REQUIRE(c.custody_log().size() == 2);
  CHECK(c.custody_log()[0].action == CustodyAction::Acquired);
  CHECK(c.custody_log()[0].digest_at_action == kEmptySha);
  CHECK(c.custody_log()[1].seq == 2);
  CHECK(c.custody_log()[1].actor == "alice");
}

TEST_CASE("verify_integrity") {
  TempDir dir;
  write_bytes(dir / "ev.bin", "evidence bytes");
  Case c("C-001", "alice", UtcTime::from_seconds(1'600'000'000));
  const auto id = c.register_evidence(dir / "ev.bin", EvidenceKind::OpaqueFile, 8).evidence_id;

  CHECK(c.verify_integrity(id));
  write_bytes(dir / "ev.bin", "evidence bytez");
  CHECK_FALSE(c.verify_integrity(id));
  CHECK(code_of([&] { c.verify_integrity("E9999"); }) == ErrorCode::NotFound);

  // every verification is logged, pass or fail
  REQUIRE(c.custody_log().size() == 3);
  CHECK(c.custody_log()[1].action == CustodyAction::Verified);
  CHECK(c.custody_log()[2].digest_at_action != c.evidence()[0].sha256);
}

TEST_CASE("custody timestamps per item never decrease") {
  TempDir dir;
  write_bytes(dir / "ev.bin", "x");
  Case c("C-001", "alice", UtcTime::from_seconds(1'600'000'000));
  const auto id = c.register_evidence(dir / "ev.bin", EvidenceKind::OpaqueFile, 8, ticking(1'700'000'000)).evidence_id;
  c.record_action(id, CustodyAction::Analyzed, ticking(1'500'000'000));  // clock went backwards
  CHECK(c.custody_log()[1].at >= c.custody_log()[0].at);
}

TEST_CASE("manifest round trip is exact and deterministic") {
  TempDir dir;
  write_bytes(dir / "ev\tname.bin", "abc");
  write_bytes(dir / "d/f", "test");
  Workspace ws(dir / "ws", ticking(1'650'000'000));
  auto c = ws.open_case("C-7", "eve\\tab");
  c.register_evidence(dir / "ev\tname.bin", EvidenceKind::RegistryHive, 8, ws.clock());
  c.register_evidence(dir / "d", EvidenceKind::DirectoryTree, 7, ws.clock());
  c.verify_integrity("E0001", ws.clock());
  c.record_action("E0002", CustodyAction::Exported, ws.clock());
  ws.save(c);

  const auto back = ws.load("C-7");
  CHECK(back.case_id() == c.case_id());
  CHECK(back.examiner() == c.examiner());
  CHECK(back.created_at() == c.created_at());
  CHECK(back.evidence() == c.evidence());
  CHECK(back.custody_log() == c.custody_log());
  CHECK(back.serialize() == c.serialize());
  CHECK(ws.case_ids() == std::vector<std::string>{"C-7"});
  CHECK(code_of([&] { ws.load("C-8"); }) == ErrorCode::NotFound);
}

TEST_CASE("evidence kind names round trip") {
  for (auto k : {EvidenceKind::DirectoryTree, EvidenceKind::SqliteStore, EvidenceKind::RegistryHive,
                 EvidenceKind::MemoryDump, EvidenceKind::CacheStore, EvidenceKind::OpaqueFile})
    CHECK(parse_evidence_kind(to_string(k)) == k);
  CHECK_FALSE(parse_evidence_kind("floppy").has_value());
}
