#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "../support.hpp"
#include "d2wfp/error.hpp"
#include "d2wfp/sqlite/carver.hpp"
#include "d2wfp/sqlite/database.hpp"

namespace fs = std::filesystem;
using namespace d2wfp;
using namespace d2wfp::sqlite;
using testing::Oracle;
using testing::TempDir;
using testing::encode_varint;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::Invalid;
}

std::vector<std::vector<std::string>> our_rows(const Database& db, const std::string& table) {
  std::vector<std::vector<std::string>> out;
  for (const auto& r : db.read_table(table)) {
    std::vector<std::string> row{"i:" + std::to_string(r.rowid)};
    for (const auto& v : r.columns) row.push_back(testing::render(v));
    out.push_back(std::move(row));
  }
  return out;
}

std::set<std::string> carved_texts(const CarveResult& r) {
  std::set<std::string> out;
  for (const auto& rec : r.records)
    for (std::size_t i = 0; i < rec.columns.size(); ++i)
      if (const auto* s = std::get_if<std::string>(&rec.columns[i])) out.insert(*s);
  return out;
}

}  // namespace

TEST_CASE("parse_header against the reference engine") {
  TempDir dir;
  {
    Oracle db(dir / "a.db");
    db.exec("CREATE TABLE t(x)");
  }
  {
    Oracle db(dir / "b.db");
    db.exec("PRAGMA page_size=65536");
    db.exec("CREATE TABLE t(x)");
  }
  const auto a = read_file(dir / "a.db");
  CHECK(parse_header(a).page_size == 4096);
  const auto b = read_file(dir / "b.db");
  CHECK(b[16] == 0x00);
  CHECK(b[17] == 0x01);
  CHECK(parse_header(b).page_size == 65536);

  auto bad = a;
  bad[0] = 0x00;
  CHECK(code_of([&] { parse_header(bad); }) == ErrorCode::NotSqlite);
  CHECK(code_of([&] { parse_header(ByteView(a.data(), 50)); }) == ErrorCode::Truncated);
  auto odd = a;
  odd[16] = 0x03;
  odd[17] = 0x00;  // 768 is not a power of two
  CHECK(code_of([&] { parse_header(odd); }) == ErrorCode::CorruptHeader);
}

TEST_CASE("read_varint examples") {
  const Bytes zero{0x00}, thousand{0x87, 0x68}, one28{0x81, 0x00};
  CHECK(read_varint(zero, 0).value == 0);
  CHECK(read_varint(zero, 0).width == 1);
  CHECK(read_varint(thousand, 0).value == 1000);
  CHECK(read_varint(thousand, 0).width == 2);
  CHECK(read_varint(one28, 0).value == 128);
  CHECK(read_varint(one28, 0).width == 2);
  CHECK(encode_varint(1000) == thousand);
  const Bytes cut{0x87};
  CHECK(code_of([&] { read_varint(cut, 0); }) == ErrorCode::Truncated);
  CHECK_FALSE(try_read_varint(cut, 0).has_value());
}

TEST_CASE("varint round trip on random values") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 20000; ++i) {
    // spread across every width
    const std::uint64_t v = rng() >> (rng() % 64);
    const auto enc = encode_varint(v);
    const auto dec = read_varint(enc, 0);
    REQUIRE(dec.value == v);
    REQUIRE(dec.width == enc.size());
    REQUIRE(varint_width(v) == enc.size());
  }
  CHECK(encode_varint(~0ULL).size() == 9);
  CHECK(read_varint(encode_varint(~0ULL), 0).value == ~0ULL);
}

TEST_CASE("decode_record examples") {
  const Bytes zero{0x02, 0x08};
  const auto a = decode_record(zero);
  REQUIRE(a.size() == 1);
  CHECK(std::get<std::int64_t>(a[0]) == 0);

  const Bytes null{0x02, 0x00};
  CHECK(std::holds_alternative<std::monostate>(decode_record(null).at(0)));

  const Bytes tor{0x02, 0x13, 't', 'o', 'r'};
  CHECK(std::get<std::string>(decode_record(tor).at(0)) == "tor");
  CHECK(serial_type_size(19) == 3u);
  CHECK_FALSE(serial_type_size(10).has_value());

  const Bytes overrun{0x02, 0x17, 'a'};  // text of 5 bytes, 1 present
  CHECK(code_of([&] { decode_record(overrun); }) == ErrorCode::Malformed);
}

TEST_CASE("reference engine stores 0 as serial type 8 and 'tor' as serial type 19") {
  TempDir dir;
  {
    Oracle db(dir / "a.db");
    db.exec("CREATE TABLE z(a); INSERT INTO z VALUES(0)");
    db.exec("CREATE TABLE s(a); INSERT INTO s VALUES('tor')");
  }
  const auto bytes = testing::bytes_to_string(read_file(dir / "a.db"));
  // cell: payload length, rowid 1, record header, body
  CHECK(bytes.find(std::string("\x02\x01\x02\x08", 4)) != std::string::npos);
  CHECK(bytes.find(std::string("\x05\x01\x02\x13tor", 7)) != std::string::npos);
}

TEST_CASE("parse_create_table") {
  const auto shape = parse_create_table("moz_places",
                                        "CREATE TABLE moz_places (id INTEGER PRIMARY KEY, url LONGVARCHAR, "
                                        "title TEXT, visit_count INTEGER DEFAULT 0, frecency REAL)");
  REQUIRE(shape.has_value());
  REQUIRE(shape->columns.size() == 5);
  CHECK(shape->rowid_alias == 0);
  CHECK(shape->columns[1].affinity == Affinity::Text);
  CHECK(shape->columns[3].affinity == Affinity::Integer);
  CHECK(shape->columns[4].affinity == Affinity::Real);
  CHECK(shape->column_index("title") == 2);
  CHECK_FALSE(parse_create_table("w", "CREATE TABLE w(a PRIMARY KEY, b) WITHOUT ROWID").has_value());
}

TEST_CASE("walk_btree matches the reference engine") {
  TempDir dir;
  {
    Oracle db(dir / "a.db");
    db.exec("CREATE TABLE three(a TEXT, b INTEGER)");
    db.exec("INSERT INTO three VALUES('x', 1), ('y', 2), ('z', 3)");
    db.exec("CREATE TABLE empty(a)");
    db.exec("CREATE TABLE many(id INTEGER PRIMARY KEY, v TEXT)");
    db.exec("BEGIN");
    for (int i = 1; i <= 500; ++i) db.exec("INSERT INTO many(v) VALUES('row " + std::to_string(i) + "')");
    db.exec("COMMIT");
  }
  const auto db = Database::open(dir / "a.db");
  Oracle oracle(dir / "a.db");

  const auto three = db.read_table("three");
  REQUIRE(three.size() == 3);
  CHECK(three[0].rowid == 1);
  CHECK(three[2].rowid == 3);
  CHECK(our_rows(db, "three") == oracle.rows("SELECT rowid, * FROM three ORDER BY rowid"));

  CHECK(db.read_table("empty").empty());

  const auto many = db.read_table("many");
  REQUIRE(many.size() == 500);
  for (std::size_t i = 0; i < many.size(); ++i) REQUIRE(many[i].rowid == std::int64_t(i) + 1);
  CHECK(our_rows(db, "many") == oracle.rows("SELECT rowid, * FROM many ORDER BY rowid"));
  CHECK(code_of([&] { db.read_table("nope"); }) == ErrorCode::NotFound);
}

TEST_CASE("walk_btree matches the reference engine on random schemas") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    TempDir dir;
    const auto t = testing::make_random_table(dir / "r.db", seed, 2000);
    const auto db = Database::open(dir / "r.db");
    Oracle oracle(dir / "r.db");
    INFO("seed " << seed << " page " << t.page_size << " rows " << t.rows);
    REQUIRE(oracle.rows("SELECT count(*) FROM t").at(0).at(0) == "i:" + std::to_string(t.rows));
    CHECK(our_rows(db, t.name) == oracle.rows("SELECT rowid, * FROM t ORDER BY rowid"));
  }
}

TEST_CASE("walk_btree rejects a page cycle") {
  TempDir dir;
  {
    Oracle db(dir / "a.db");
    db.exec("PRAGMA page_size=512");
    db.exec("CREATE TABLE t(v TEXT)");
    db.exec("BEGIN");
    for (int i = 0; i < 200; ++i) db.exec("INSERT INTO t VALUES('" + std::string(40, 'a') + "')");
    db.exec("COMMIT");
  }
  auto image = read_file(dir / "a.db");
  const auto root = Database(image).table_shape("t")->root_page;
  // point the root's right child back at the root itself
  auto* page = image.data() + (root - 1) * 512;
  REQUIRE(page[0] == 0x05);
  store_be32(page + 8, root);
  const Database db(std::move(image));
  CHECK(code_of([&] { walk_btree(db, root, "t"); }) == ErrorCode::CorruptTree);
}

TEST_CASE("carving a fresh database finds nothing") {
  TempDir dir;
  {
    Oracle db(dir / "a.db");
    db.exec("CREATE TABLE t(a TEXT, b INTEGER)");
    db.exec("INSERT INTO t VALUES('alpha', 1), ('beta', 2)");
  }
  const auto db = Database::open(dir / "a.db");
  CHECK(carve_freelist(db).records.empty());
  CHECK(carve_unallocated(db).records.empty());
}

TEST_CASE("carve_freelist recovers a dropped table and nothing after vacuum") {
  TempDir dir;
  {
    Oracle db(dir / "a.db");
    db.exec("PRAGMA secure_delete=OFF");
    db.exec("CREATE TABLE keep(a TEXT)");
    db.exec("INSERT INTO keep VALUES('stays')");
    db.exec("CREATE TABLE gone(note TEXT, at INTEGER)");
    db.exec("BEGIN");
    for (int i = 0; i < 300; ++i)
      db.exec("INSERT INTO gone VALUES('secret note number " + std::to_string(i) + "', " +
              std::to_string(1600000000 + i) + ")");
    db.exec("COMMIT");
    db.exec("DROP TABLE gone");
  }
  fs::copy_file(dir / "a.db", dir / "v.db");
  const auto db = Database::open(dir / "a.db");
  REQUIRE(db.header().freelist_count > 0);
  const auto texts = carved_texts(carve_freelist(db));
  CHECK_FALSE(texts.empty());
  CHECK(texts.count("secret note number 150") == 1);
  for (const auto& t : texts) CHECK(t.rfind("secret note number ", 0) == 0);

  {
    Oracle v(dir / "v.db");
    v.exec("VACUUM");
  }
  const auto vac = Database::open(dir / "v.db");
  CHECK(carve_all(vac).records.empty());
}

TEST_CASE("carve_unallocated recovers deleted rows") {
  TempDir dir;
  std::set<std::string> deleted;
  {
    Oracle db(dir / "a.db");
    db.exec("PRAGMA secure_delete=OFF");
    db.exec("CREATE TABLE t(id INTEGER PRIMARY KEY, url TEXT, visited INTEGER)");
    for (int i = 1; i <= 10; ++i)
      db.exec("INSERT INTO t(url, visited) VALUES('http://site" + std::to_string(i) + ".example/page', " +
              std::to_string(1600000000 + i * 60) + ")");
    for (int i : {2, 4, 7, 9}) {
      db.exec("DELETE FROM t WHERE id = " + std::to_string(i));
      deleted.insert("http://site" + std::to_string(i) + ".example/page");
    }
  }
  const auto db = Database::open(dir / "a.db");
  const auto r = carve_unallocated(db);
  const auto texts = carved_texts(r);
  CHECK_FALSE(texts.empty());
  for (const auto& t : texts) CHECK(deleted.count(t) == 1);
  for (const auto& rec : r.records) {
    CHECK(rec.table_name == "t");
    CHECK(rec.plausibility >= 0.5);
  }
}

TEST_CASE("overwritten freeblocks yield a partial carve without errors") {
  TempDir dir;
  std::set<std::string> deleted, live;
  {
    Oracle db(dir / "a.db");
    db.exec("PRAGMA secure_delete=OFF");
    db.exec("CREATE TABLE t(id INTEGER PRIMARY KEY, url TEXT, visited INTEGER)");
    for (int i = 1; i <= 30; ++i)
      db.exec("INSERT INTO t(url, visited) VALUES('http://host" + std::to_string(i) + ".example/a/b/c', " +
              std::to_string(1600000000 + i) + ")");
    for (int i = 5; i <= 20; i += 3) {
      db.exec("DELETE FROM t WHERE id = " + std::to_string(i));
      deleted.insert("http://host" + std::to_string(i) + ".example/a/b/c");
    }
    for (int i = 0; i < 4; ++i) db.exec("INSERT INTO t(url, visited) VALUES('http://new" + std::to_string(i) + ".example/', 1700000000)");
  }
  const auto db = Database::open(dir / "a.db");
  const auto r = carve_all(db);
  for (const auto& rec : r.records) {
    if (rec.table_name != "t" || rec.columns.size() < 2 || !rec.decoded.at(1)) continue;
    const auto* url = std::get_if<std::string>(&rec.columns[1]);
    if (url && rec.complete) CHECK(deleted.count(*url) == 1);
  }
}

TEST_CASE("plausibility_score") {
  const std::vector<Value> good{std::string("http://example.com/"), std::int64_t{1600000000}};
  CHECK(plausibility_score(good, {true, true}) == doctest::Approx(1.0));
  const std::vector<Value> junk{std::string("\x01\x02\x03\x04"), std::int64_t{-8'000'000'000'000'000'000}};
  CHECK(plausibility_score(junk, {true, true}) < 0.5);
  CHECK(plausibility_score(good, {true, false}) <= 0.5);
}
