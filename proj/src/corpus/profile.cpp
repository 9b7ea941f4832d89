#include <openssl/evp.h>
#include <sqlite3.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <nlohmann/json.hpp>

#include "d2wfp/error.hpp"
#include "d2wfp/text.hpp"
#include "internal.hpp"

namespace fs = std::filesystem;

namespace d2wfp::corpus {

namespace detail {

namespace {

constexpr std::string_view kWords[] = {
    "market", "forum", "wiki", "hidden", "mirror", "vendor", "escrow", "mail",  "search",
    "index",  "links", "news", "board",  "files",  "crypto", "secure", "drop", "store",
    "onion",  "guide", "chat", "paste",  "relay",  "portal", "leaks",  "shop", "archive"};

constexpr std::string_view kClearHosts[] = {"duckduckgo.com", "www.torproject.org", "example.org",
                                            "news.example.com", "blog.example.net"};

constexpr char kBase32[] = "abcdefghijklmnopqrstuvwxyz234567";

}  // namespace

std::string random_onion_v3(Rng& rng) {
  std::string s;
  for (int i = 0; i < 55; ++i) s.push_back(kBase32[rng.below(32)]);
  s.push_back('d');  // v3 addresses end in the version nibble
  return s + ".onion";
}

std::string random_onion_v2(Rng& rng) {
  std::string s;
  for (int i = 0; i < 16; ++i) s.push_back(kBase32[rng.below(32)]);
  return s + ".onion";
}

std::string random_token(Rng& rng, std::size_t n) {
  static constexpr char kAlpha[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(kAlpha[rng.below(64)]);
  return s;
}

std::string pick_words(Rng& rng, std::size_t n, char sep) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s.push_back(sep);
    s += rng.pick(kWords);
  }
  return s;
}

UtcTime random_time(Rng& rng) {
  // 2021-01-01 plus up to three years
  const std::int64_t base = 1609459200;
  const std::int64_t secs = base + static_cast<std::int64_t>(rng.below(3 * 365 * 86400));
  return UtcTime{secs * 1'000'000 + static_cast<std::int64_t>(rng.below(1'000'000))};
}

std::string history_url(std::uint64_t seed, std::size_t i) {
  Rng rng(seed, kHistory, i);
  switch (rng.below(4)) {
    case 0:
    case 1:
      return "http://" + random_onion_v3(rng) + "/" + pick_words(rng, 2, '/') + "/" + std::to_string(i);
    case 2:
      return "https://duckduckgo.com/?q=" + pick_words(rng, 2, '+') + "+" + std::to_string(i);
    default:
      return "https://" + std::string(rng.pick(kClearHosts)) + "/" + pick_words(rng, 1, '-') +
             "-" + std::to_string(i) + ".html";
  }
}

}  // namespace detail

using namespace detail;

namespace {

// ---- thin RAII layer over the reference engine -------------------------------------------

struct DbCloser {
  void operator()(sqlite3* db) const { sqlite3_close(db); }
};
struct StmtFinalizer {
  void operator()(sqlite3_stmt* s) const { sqlite3_finalize(s); }
};

class Db {
 public:
  explicit Db(const fs::path& path) {
    sqlite3* raw = nullptr;
    if (sqlite3_open(path.string().c_str(), &raw) != SQLITE_OK) {
      std::string msg = raw ? sqlite3_errmsg(raw) : "out of memory";
      sqlite3_close(raw);
      throw Error(ErrorCode::IoError, "cannot open " + path.string() + ": " + msg);
    }
    db_.reset(raw);
    exec("PRAGMA secure_delete=OFF");
    exec("PRAGMA auto_vacuum=NONE");
    exec("PRAGMA journal_mode=DELETE");
  }

  void exec(const std::string& sql) {
    char* err = nullptr;
    if (sqlite3_exec(db_.get(), sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
      std::string msg = err ? err : "unknown";
      sqlite3_free(err);
      throw Error(ErrorCode::IoError, "sql failed: " + msg + " in: " + sql);
    }
  }

  class Stmt {
   public:
    Stmt(sqlite3* db, const std::string& sql) : db_(db) {
      sqlite3_stmt* raw = nullptr;
      if (sqlite3_prepare_v2(db, sql.c_str(), -1, &raw, nullptr) != SQLITE_OK)
        throw Error(ErrorCode::IoError, std::string("prepare failed: ") + sqlite3_errmsg(db));
      s_.reset(raw);
    }
    Stmt& bind(int i, std::int64_t v) {
      sqlite3_bind_int64(s_.get(), i, v);
      return *this;
    }
    Stmt& bind(int i, const std::string& v) {
      sqlite3_bind_text(s_.get(), i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT);
      return *this;
    }
    Stmt& bind_null(int i) {
      sqlite3_bind_null(s_.get(), i);
      return *this;
    }
    void run() {
      const int rc = sqlite3_step(s_.get());
      if (rc != SQLITE_DONE && rc != SQLITE_ROW)
        throw Error(ErrorCode::IoError, std::string("step failed: ") + sqlite3_errmsg(db_));
      sqlite3_reset(s_.get());
      sqlite3_clear_bindings(s_.get());
    }

   private:
    sqlite3* db_;
    std::unique_ptr<sqlite3_stmt, StmtFinalizer> s_;
  };

  Stmt prepare(const std::string& sql) { return Stmt(db_.get(), sql); }
  std::int64_t last_rowid() const { return sqlite3_last_insert_rowid(db_.get()); }

 private:
  std::unique_ptr<sqlite3, DbCloser> db_;
};

constexpr const char* kPlacesSchema = R"sql(
CREATE TABLE moz_places (id INTEGER PRIMARY KEY, url LONGVARCHAR, title LONGVARCHAR, rev_host LONGVARCHAR, visit_count INTEGER DEFAULT 0, hidden INTEGER DEFAULT 0 NOT NULL, typed INTEGER DEFAULT 0 NOT NULL, frecency INTEGER DEFAULT -1 NOT NULL, last_visit_date INTEGER , guid TEXT, foreign_count INTEGER DEFAULT 0 NOT NULL, url_hash INTEGER DEFAULT 0 NOT NULL , description TEXT, preview_image_url TEXT, origin_id INTEGER REFERENCES moz_origins(id));
CREATE TABLE moz_historyvisits (id INTEGER PRIMARY KEY, from_visit INTEGER, place_id INTEGER, visit_date INTEGER, visit_type INTEGER, session INTEGER, source INTEGER DEFAULT 0 NOT NULL, triggeringPlaceId INTEGER);
CREATE TABLE moz_bookmarks (id INTEGER PRIMARY KEY, type INTEGER, fk INTEGER DEFAULT NULL, parent INTEGER, position INTEGER, title LONGVARCHAR, keyword_id INTEGER, folder_type TEXT, dateAdded INTEGER, lastModified INTEGER, guid TEXT UNIQUE NOT NULL, syncStatus INTEGER NOT NULL DEFAULT 0, syncChangeCounter INTEGER NOT NULL DEFAULT 1);
CREATE TABLE moz_anno_attributes (id INTEGER PRIMARY KEY, name VARCHAR(32) UNIQUE NOT NULL);
CREATE TABLE moz_annos (id INTEGER PRIMARY KEY, place_id INTEGER NOT NULL, anno_attribute_id INTEGER, content LONGVARCHAR, flags INTEGER DEFAULT 0, expiration INTEGER DEFAULT 0, type INTEGER DEFAULT 0, dateAdded INTEGER DEFAULT 0, lastModified INTEGER DEFAULT 0);
CREATE UNIQUE INDEX moz_places_guid_uniqueindex ON moz_places (guid);
CREATE INDEX moz_historyvisits_placedateindex ON moz_historyvisits (place_id, visit_date);
)sql";

constexpr const char* kCookiesSchema = R"sql(
CREATE TABLE moz_cookies (id INTEGER PRIMARY KEY, originAttributes TEXT NOT NULL DEFAULT '', name TEXT, value TEXT, host TEXT, path TEXT, expiry INTEGER, lastAccessed INTEGER, creationTime INTEGER, isSecure INTEGER, isHttpOnly INTEGER, inBrowserElement INTEGER DEFAULT 0, sameSite INTEGER DEFAULT 0, rawSameSite INTEGER DEFAULT 0, schemeMap INTEGER DEFAULT 0, CONSTRAINT moz_uniqueid UNIQUE (name, host, path, originAttributes));
)sql";

constexpr const char* kFormSchema = R"sql(
CREATE TABLE moz_formhistory (id INTEGER PRIMARY KEY, fieldname TEXT NOT NULL, value TEXT NOT NULL, timesUsed INTEGER, firstUsed INTEGER, lastUsed INTEGER, guid TEXT);
CREATE INDEX moz_formhistory_index ON moz_formhistory (fieldname);
)sql";

constexpr std::string_view kSearchFields[] = {"searchbar-history", "q", "query", "search"};
constexpr std::string_view kOtherFields[] = {"address", "name", "email", "username", "comment"};
constexpr std::string_view kSearchPhrases[] = {"buy passport", "hidden wiki", "tor market",
                                              "bitcoin mixer", "onion links", "secure drop"};
constexpr std::string_view kExtensions[] = {"pdf", "zip", "exe", "txt", "jpg"};

std::uint32_t fnv32(std::string_view s) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : s) h = (h ^ c) * 16777619u;
  return h;
}

std::int64_t url_hash(const std::string& url) {
  const auto colon = url.find(':');
  const std::string prefix = url.substr(0, colon);
  return (std::int64_t{fnv32(prefix) & 0xffff} << 32) | fnv32(url);
}

std::string host_of(const std::string& url) {
  auto p = url.find("://");
  if (p == std::string::npos) return {};
  p += 3;
  auto e = url.find_first_of("/?#", p);
  return url.substr(p, e == std::string::npos ? std::string::npos : e - p);
}

std::string rev_host(const std::string& host) {
  std::string r(host.rbegin(), host.rend());
  return r + ".";
}

std::int64_t micros(UtcTime t) { return t.micros; }
std::int64_t millis(UtcTime t) { return t.micros / 1000; }

struct PlaceRow {
  std::string url;
  std::string title;
  std::int64_t visit_count = 0;
  std::optional<UtcTime> last_visit;
  std::int64_t foreign_count = 0;
};

class PlacesWriter {
 public:
  explicit PlacesWriter(Db& db)
      : db_(db),
        place_(db.prepare("INSERT INTO moz_places (id, url, title, rev_host, visit_count, hidden, typed, "
                          "frecency, last_visit_date, guid, foreign_count, url_hash) "
                          "VALUES (?,?,?,?,?,0,?,?,?,?,?,?)")),
        visit_(db.prepare("INSERT INTO moz_historyvisits (id, from_visit, place_id, visit_date, "
                          "visit_type, session, source) VALUES (?,0,?,?,?,0,0)")),
        bookmark_(db.prepare("INSERT INTO moz_bookmarks (id, type, fk, parent, position, title, "
                             "dateAdded, lastModified, guid, syncStatus, syncChangeCounter) "
                             "VALUES (?,1,?,3,?,?,?,?,?,1,1)")),
        anno_(db.prepare("INSERT INTO moz_annos (id, place_id, anno_attribute_id, content, flags, "
                         "expiration, type, dateAdded, lastModified) VALUES (?,?,?,?,0,4,3,?,?)")) {}

  std::int64_t add_place(Rng& rng, const PlaceRow& p) {
    const std::int64_t id = ++place_id_;
    place_.bind(1, id).bind(2, p.url).bind(3, p.title).bind(4, rev_host(host_of(p.url)));
    place_.bind(5, p.visit_count).bind(6, static_cast<std::int64_t>(rng.below(2)));
    place_.bind(7, p.visit_count > 0 ? 100 + static_cast<std::int64_t>(rng.below(2000)) : 0);
    if (p.last_visit) {
      place_.bind(8, micros(*p.last_visit));
    } else {
      place_.bind_null(8);
    }
    place_.bind(9, random_token(rng, 12)).bind(10, p.foreign_count).bind(11, url_hash(p.url));
    place_.run();
    return id;
  }

  std::int64_t add_visit(std::int64_t place, UtcTime at, std::int64_t type) {
    const std::int64_t id = ++visit_id_;
    visit_.bind(1, id).bind(2, place).bind(3, micros(at)).bind(4, type).run();
    return id;
  }

  std::int64_t add_bookmark(Rng& rng, std::int64_t place, const std::string& title, UtcTime added) {
    const std::int64_t id = ++bookmark_id_;
    bookmark_.bind(1, id).bind(2, place).bind(3, position_++).bind(4, title);
    bookmark_.bind(5, micros(added)).bind(6, micros(added)).bind(7, random_token(rng, 12)).run();
    return id;
  }

  std::int64_t add_anno(std::int64_t place, std::int64_t attribute, const std::string& content,
                        UtcTime at) {
    const std::int64_t id = ++anno_id_;
    anno_.bind(1, id).bind(2, place).bind(3, attribute).bind(4, content);
    anno_.bind(5, micros(at)).bind(6, micros(at)).run();
    return id;
  }

  void set_next_ids(std::int64_t place, std::int64_t visit, std::int64_t bookmark, std::int64_t anno) {
    place_id_ = place;
    visit_id_ = visit;
    bookmark_id_ = bookmark;
    anno_id_ = anno;
  }

 private:
  Db& db_;
  Db::Stmt place_, visit_, bookmark_, anno_;
  std::int64_t place_id_ = 0, visit_id_ = 0, bookmark_id_ = 5, anno_id_ = 0, position_ = 0;
};

TruthEntry history_entry(PlacesWriter& w, std::uint64_t seed, std::size_t i) {
  Rng rng(seed, kHistory, i + 0x10000);
  const std::string url = history_url(seed, i);
  const UtcTime at = random_time(rng);
  PlaceRow p{url, pick_words(rng, 3, ' '), 1, at, 0};
  const auto place = w.add_place(rng, p);
  const auto visit = w.add_visit(place, at, 1 + static_cast<std::int64_t>(rng.below(2)));
  TruthEntry e;
  e.store = "places.sqlite";
  e.locator = "moz_historyvisits:" + std::to_string(visit) + ",moz_places:" + std::to_string(place);
  e.category = Category::BrowsingHistory;
  e.kind = ArtifactKind::Urls;
  e.value = url;
  e.timestamps.push_back({"visit", at, true});
  return e;
}

TruthEntry bookmark_entry(PlacesWriter& w, std::uint64_t seed, std::size_t i) {
  Rng rng(seed, kBookmark, i);
  const std::string title = i == 0 ? "hidden wiki" : pick_words(rng, 2, ' ') + " " + std::to_string(i);
  const std::string url = "http://" + random_onion_v3(rng) + "/";
  const UtcTime added = random_time(rng);
  const auto place = w.add_place(rng, {url, title, 0, std::nullopt, 1});
  const auto bm = w.add_bookmark(rng, place, title, added);
  TruthEntry e;
  e.store = "places.sqlite";
  e.locator = "moz_bookmarks:" + std::to_string(bm) + ",moz_places:" + std::to_string(place);
  e.category = Category::BrowsingHistory;
  e.kind = ArtifactKind::Bookmarks;
  e.value = title;
  e.timestamps.push_back({"added", added, true});
  return e;
}

TruthEntry download_entry(PlacesWriter& w, std::uint64_t seed, std::size_t i) {
  Rng rng(seed, kDownload, i);
  const std::string name = pick_words(rng, 2, '_') + "_" + std::to_string(i) + "." + std::string(rng.pick(kExtensions));
  const std::string source = "http://" + random_onion_v3(rng) + "/files/" + name;
  const std::string dest = "file:///home/analyst/Downloads/" + name;
  const UtcTime started = random_time(rng);
  const UtcTime ended = UtcTime{started.micros + static_cast<std::int64_t>(rng.below(600)) * 1'000'000};
  const auto place = w.add_place(rng, {source, name, 0, std::nullopt, 0});
  const auto a1 = w.add_anno(place, 1, dest, started);
  nlohmann::json meta = {{"state", 1}, {"endTime", millis(ended)},
                         {"fileSize", 1024 + rng.below(1 << 20)}};
  const auto a2 = w.add_anno(place, 2, meta.dump(), started);
  TruthEntry e;
  e.store = "places.sqlite";
  e.locator = "moz_annos:" + std::to_string(a1) + ",moz_annos:" + std::to_string(a2) +
              ",moz_places:" + std::to_string(place);
  e.category = Category::Downloads;
  e.kind = ArtifactKind::DownloadFiles;
  e.value = dest;
  e.timestamps.push_back({"download-end", UtcTime{millis(ended) * 1000}, true});
  return e;
}

TruthEntry cookie_entry(Db::Stmt& ins, std::int64_t id, std::uint64_t seed, std::size_t i) {
  Rng rng(seed, kCookie, i);
  const std::string name = "c" + std::to_string(i) + "_" + pick_words(rng, 1, '_');
  const std::string host = rng.chance(60) ? "." + random_onion_v3(rng) : ".example" + std::to_string(rng.below(50)) + ".com";
  const std::string path = "/";
  const UtcTime created = random_time(rng);
  const UtcTime accessed = UtcTime{created.micros + static_cast<std::int64_t>(rng.below(86400)) * 1'000'000};
  const std::int64_t expiry = created.seconds() + 86400 * 365;
  ins.bind(1, id).bind(2, std::string()).bind(3, name).bind(4, random_token(rng, 24)).bind(5, host);
  ins.bind(6, path).bind(7, expiry).bind(8, micros(accessed)).bind(9, micros(created));
  ins.bind(10, static_cast<std::int64_t>(rng.below(2))).bind(11, static_cast<std::int64_t>(rng.below(2)));
  ins.run();
  TruthEntry e;
  e.store = "cookies.sqlite";
  e.locator = "moz_cookies:" + std::to_string(id);
  e.category = Category::CacheTemp;
  e.kind = ArtifactKind::Cookies;
  e.value = "name=" + name + "; host=" + host + "; path=" + path;
  e.timestamps.push_back({"created", created, true});
  e.timestamps.push_back({"accessed", accessed, true});
  return e;
}

TruthEntry form_entry(Db::Stmt& ins, std::int64_t id, std::uint64_t seed, std::size_t i) {
  Rng rng(seed, kForm, i);
  const bool search = i % 2 == 0;
  const std::string field(search ? rng.pick(kSearchFields) : rng.pick(kOtherFields));
  std::string value;
  if (search) {
    value = i == 0 ? "buy passport" : std::string(rng.pick(kSearchPhrases)) + " " + std::to_string(i);
  } else {
    value = pick_words(rng, 2, ' ') + " " + std::to_string(i);
  }
  const UtcTime first = random_time(rng);
  const UtcTime last = UtcTime{first.micros + static_cast<std::int64_t>(rng.below(86400 * 30)) * 1'000'000};
  ins.bind(1, id).bind(2, field).bind(3, value).bind(4, 1 + static_cast<std::int64_t>(rng.below(9)));
  ins.bind(5, micros(first)).bind(6, micros(last)).bind(7, random_token(rng, 12)).run();
  TruthEntry e;
  e.store = "formhistory.sqlite";
  e.locator = "moz_formhistory:" + std::to_string(id);
  e.category = Category::SqliteDbForm;
  e.kind = search ? ArtifactKind::SearchQueries : ArtifactKind::UsageSession;
  e.value = value;
  e.timestamps.push_back({"first-used", first, true});
  e.timestamps.push_back({"last-used", last, true});
  return e;
}

std::string base64(ByteView data) {
  std::string out(4 * ((data.size() + 2) / 3) + 1, '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data.data(),
                                static_cast<int>(data.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

// cache2 names entry files after the SHA-1 of the key
std::string sha1_upper(std::string_view key) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(key.data(), key.size(), md, &len, EVP_sha1(), nullptr);
  std::string hex = to_hex(ByteView(md, len));
  for (auto& c : hex) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return hex;
}

std::string opaque_blob(Rng& rng) {
  Bytes b(48);
  for (auto& x : b) x = static_cast<std::uint8_t>(rng.below(256));
  return base64(b);
}

void write_logins(const CorpusSpec& spec, const fs::path& dir, GroundTruth& truth) {
  nlohmann::ordered_json logins = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < spec.logins; ++i) {
    Rng rng(spec.seed, kLogin, i);
    const std::string host = "http://" + random_onion_v3(rng);
    const UtcTime created = random_time(rng);
    const UtcTime used = UtcTime{created.micros + static_cast<std::int64_t>(rng.below(86400 * 90)) * 1'000'000};
    const std::string guid = "{" + random_token(rng, 8) + "-" + random_token(rng, 4) + "}";
    logins.push_back({{"id", i + 1},
                      {"hostname", host},
                      {"httpRealm", nullptr},
                      {"formSubmitURL", host + "/login"},
                      {"usernameField", "user"},
                      {"passwordField", "pass"},
                      {"encryptedUsername", opaque_blob(rng)},
                      {"encryptedPassword", opaque_blob(rng)},
                      {"guid", guid},
                      {"encType", 1},
                      {"timeCreated", millis(created)},
                      {"timeLastUsed", millis(used)},
                      {"timePasswordChanged", millis(created)},
                      {"timesUsed", 1 + rng.below(20)}});
    TruthEntry e;
    e.store = "logins.json";
    e.locator = "logins[" + std::to_string(i) + "]";
    e.category = Category::SecurityLogins;
    e.kind = ArtifactKind::Usernames;
    e.value = host;
    e.timestamps.push_back({"created", UtcTime{millis(created) * 1000}, true});
    e.timestamps.push_back({"last-used", UtcTime{millis(used) * 1000}, true});
    truth.entries.push_back(std::move(e));
  }
  nlohmann::ordered_json doc = {{"nextId", spec.logins + 1},
                                {"logins", logins},
                                {"potentiallyVulnerablePasswords", nlohmann::ordered_json::array()},
                                {"dismissedBreachAlertsByLoginGUID", nlohmann::ordered_json::object()},
                                {"version", 3}};
  write_text_file(dir / "logins.json", doc.dump());
}

void put_be32(Bytes& b, std::uint32_t v) {
  const std::size_t n = b.size();
  b.resize(n + 4);
  store_be32(b.data() + n, v);
}

void write_cache(const CorpusSpec& spec, const fs::path& dir, GroundTruth& truth) {
  const fs::path entries = dir / "cache2" / "entries";
  fs::create_directories(entries);
  std::vector<std::pair<std::string, TruthEntry>> made;
  for (std::size_t i = 0; i < spec.cache; ++i) {
    Rng rng(spec.seed, kCache, i);
    const std::string url = (rng.chance(50) ? "http://" + random_onion_v3(rng) : std::string("https://example.org")) +
                            "/static/" + pick_words(rng, 1, '-') + "-" + std::to_string(i) + ".js";
    const std::string key = (rng.chance(50) ? "a," : "") + std::string(":") + url;
    const UtcTime fetched = UtcTime::from_seconds(random_time(rng).seconds());
    const UtcTime modified = UtcTime::from_seconds(fetched.seconds() - static_cast<std::int64_t>(rng.below(86400 * 30)));

    Bytes file(rng.below(3000));
    for (auto& x : file) x = static_cast<std::uint8_t>(rng.below(256));
    const auto meta_offset = static_cast<std::uint32_t>(file.size());
    const std::uint32_t chunks = (meta_offset + (1u << 18) - 1) >> 18;
    put_be32(file, static_cast<std::uint32_t>(rng.next()));  // metadata hash
    for (std::uint32_t c = 0; c < chunks; ++c) {
      file.push_back(static_cast<std::uint8_t>(rng.below(256)));
      file.push_back(static_cast<std::uint8_t>(rng.below(256)));
    }
    put_be32(file, 3);  // version
    put_be32(file, 1 + static_cast<std::uint32_t>(rng.below(20)));
    put_be32(file, static_cast<std::uint32_t>(fetched.seconds()));
    put_be32(file, static_cast<std::uint32_t>(modified.seconds()));
    put_be32(file, static_cast<std::uint32_t>(rng.below(100000)));
    put_be32(file, static_cast<std::uint32_t>(fetched.seconds() + 86400));
    put_be32(file, static_cast<std::uint32_t>(key.size()));
    put_be32(file, 0);  // flags
    file.insert(file.end(), key.begin(), key.end());
    file.push_back(0);
    for (std::string_view kv : {std::string_view("request-method\0GET\0", 19),
                                std::string_view("response-head\0HTTP/1.1 200 OK\r\n\0", 32)})
      file.insert(file.end(), kv.begin(), kv.end());
    put_be32(file, meta_offset);

    const std::string name = sha1_upper(key);
    write_file(entries / name, file);

    TruthEntry e;
    e.store = "cache2/entries/" + name;
    e.locator = name;
    e.category = Category::CacheTemp;
    e.kind = ArtifactKind::WebsiteContent;
    e.value = url;
    e.timestamps.push_back({"fetched", fetched, true});
    e.timestamps.push_back({"modified", modified, true});
    truth.entries.push_back(std::move(e));
  }
}

void remove_store(const fs::path& p) {
  std::error_code ec;
  fs::remove(p, ec);
  fs::remove(fs::path(p.string() + "-journal"), ec);
  fs::remove(fs::path(p.string() + "-wal"), ec);
}

struct Row {
  std::string table;
  std::int64_t id;
};

std::vector<Row> parse_locator_rows(std::string_view locator) {
  std::vector<Row> rows;
  for (auto part : split(locator, ',')) {
    const auto colon = part.find(':');
    if (colon == std::string_view::npos) continue;
    rows.push_back({std::string(part.substr(0, colon)), std::stoll(std::string(part.substr(colon + 1)))});
  }
  return rows;
}

bool is_sqlite_store(const std::string& store) {
  return store == "places.sqlite" || store == "cookies.sqlite" || store == "formhistory.sqlite";
}

}  // namespace

GroundTruth generate_profile(const CorpusSpec& spec, const fs::path& dir) {
  fs::create_directories(dir);
  GroundTruth truth;

  remove_store(dir / "places.sqlite");
  {
    Db db(dir / "places.sqlite");
    db.exec(kPlacesSchema);
    db.exec("BEGIN");
    db.exec("INSERT INTO moz_bookmarks (id, type, parent, position, title, dateAdded, lastModified, guid) VALUES "
            "(1,2,0,0,'',1609459200000000,1609459200000000,'root________'),"
            "(2,2,1,0,'menu',1609459200000000,1609459200000000,'menu________'),"
            "(3,2,1,1,'toolbar',1609459200000000,1609459200000000,'toolbar_____'),"
            "(4,2,1,2,'tags',1609459200000000,1609459200000000,'tags________'),"
            "(5,2,1,3,'unfiled',1609459200000000,1609459200000000,'unfiled_____')");
    db.exec("INSERT INTO moz_anno_attributes (id, name) VALUES (1,'downloads/destinationFileURI'),"
            "(2,'downloads/metaData')");
    PlacesWriter w(db);
    // interleave the three places-backed record types so their pages mix
    std::size_t h = 0, b = 0, d = 0;
    while (h < spec.history || b < spec.bookmarks || d < spec.downloads) {
      if (h < spec.history) truth.entries.push_back(history_entry(w, spec.seed, h++));
      if (b < spec.bookmarks) truth.entries.push_back(bookmark_entry(w, spec.seed, b++));
      if (d < spec.downloads) truth.entries.push_back(download_entry(w, spec.seed, d++));
    }
    db.exec("COMMIT");
  }

  remove_store(dir / "cookies.sqlite");
  {
    Db db(dir / "cookies.sqlite");
    db.exec(kCookiesSchema);
    db.exec("PRAGMA user_version=12");
    db.exec("BEGIN");
    auto ins = db.prepare(
        "INSERT INTO moz_cookies (id, originAttributes, name, value, host, path, expiry, lastAccessed, "
        "creationTime, isSecure, isHttpOnly) VALUES (?,?,?,?,?,?,?,?,?,?,?)");
    for (std::size_t i = 0; i < spec.cookies; ++i)
      truth.entries.push_back(cookie_entry(ins, static_cast<std::int64_t>(i + 1), spec.seed, i));
    db.exec("COMMIT");
  }

  remove_store(dir / "formhistory.sqlite");
  {
    Db db(dir / "formhistory.sqlite");
    db.exec(kFormSchema);
    db.exec("BEGIN");
    auto ins = db.prepare(
        "INSERT INTO moz_formhistory (id, fieldname, value, timesUsed, firstUsed, lastUsed, guid) "
        "VALUES (?,?,?,?,?,?,?)");
    for (std::size_t i = 0; i < spec.forms; ++i)
      truth.entries.push_back(form_entry(ins, static_cast<std::int64_t>(i + 1), spec.seed, i));
    db.exec("COMMIT");
  }

  write_logins(spec, dir, truth);
  write_cache(spec, dir, truth);

  if (spec.tor_layout) {
    nlohmann::ordered_json ext = {
        {"schemaVersion", 35},
        {"addons", {{{"id", "torbutton@torproject.org"}, {"version", "10.5"}, {"active", true}}}}};
    write_text_file(dir / "extensions.json", ext.dump());
  }
  return truth;
}

namespace {

// The column text a carver would have to find for this entry.
std::string stored_needle(const TruthEntry& e) {
  if (e.kind == ArtifactKind::Cookies) return e.value.substr(0, e.value.find('='));
  return e.value;
}

}  // namespace

GroundTruth apply_antiforensics(const fs::path& dir, AntiForensics arm, const GroundTruth& truth,
                                const CorpusSpec& spec) {
  if (arm == AntiForensics::None) return truth;
  GroundTruth out = truth;

  // pick the victims per store/kind so every record type loses the same share
  std::map<std::pair<std::string, int>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < out.entries.size(); ++i) {
    const auto& e = out.entries[i];
    if (e.expect == Expectation::Live && is_sqlite_store(e.store))
      groups[{e.store, static_cast<int>(e.kind)}].push_back(i);
  }
  std::map<std::string, std::vector<std::size_t>> victims;
  for (auto& [key, idx] : groups) {
    Rng rng(spec.seed, kDelete, static_cast<std::uint64_t>(key.second));
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
    const auto n = static_cast<std::size_t>(static_cast<double>(idx.size()) * spec.delete_fraction + 0.5);
    for (std::size_t k = 0; k < std::min(n, idx.size()); ++k) victims[key.first].push_back(idx[k]);
  }

  for (const auto& store : {std::string("places.sqlite"), std::string("cookies.sqlite"),
                            std::string("formhistory.sqlite")}) {
    if (!fs::exists(dir / store)) continue;
    {
    Db db(dir / store);
    db.exec("BEGIN");
    for (auto i : victims[store]) {
      for (const auto& row : parse_locator_rows(out.entries[i].locator)) {
        auto del = db.prepare("DELETE FROM " + row.table + " WHERE id=?");
        del.bind(1, row.id).run();
      }
      out.entries[i].expect = Expectation::Carvable;
    }
    db.exec("COMMIT");

    if (spec.reinsert > 0 && arm == AntiForensics::DeleteRows) {
      db.exec("BEGIN");
      if (store == "places.sqlite") {
        PlacesWriter w(db);
        w.set_next_ids(1'000'000, 1'000'000, 1'000'000, 1'000'000);
        for (std::size_t k = 0; k < spec.reinsert; ++k)
          out.entries.push_back(history_entry(w, spec.seed ^ 0x5eed, 1'000'000 + k));
      } else if (store == "cookies.sqlite") {
        auto ins = db.prepare(
            "INSERT INTO moz_cookies (id, originAttributes, name, value, host, path, expiry, lastAccessed, "
            "creationTime, isSecure, isHttpOnly) VALUES (?,?,?,?,?,?,?,?,?,?,?)");
        for (std::size_t k = 0; k < spec.reinsert; ++k)
          out.entries.push_back(cookie_entry(ins, static_cast<std::int64_t>(1'000'000 + k), spec.seed ^ 0x5eed, 1'000'000 + k));
      } else {
        auto ins = db.prepare(
            "INSERT INTO moz_formhistory (id, fieldname, value, timesUsed, firstUsed, lastUsed, guid) "
            "VALUES (?,?,?,?,?,?,?)");
        for (std::size_t k = 0; k < spec.reinsert; ++k)
          out.entries.push_back(form_entry(ins, static_cast<std::int64_t>(1'000'000 + k), spec.seed ^ 0x5eed, 1'000'000 + k));
      }
      db.exec("COMMIT");
      for (auto i : victims[store]) out.entries[i].expect = Expectation::OverwriteRisk;
    }
    if (arm == AntiForensics::Vacuum) {
      db.exec("VACUUM");
      for (auto i : victims[store]) out.entries[i].expect = Expectation::Unrecoverable;
    }
    }
    // b-tree rebalancing can overwrite freed cells; those are gone for good
    const auto image = read_file(dir / store);
    const std::string_view raw(reinterpret_cast<const char*>(image.data()), image.size());
    for (auto i : victims[store]) {
      auto& e = out.entries[i];
      if (e.expect != Expectation::Carvable) continue;
      if (raw.find(stored_needle(e)) == std::string_view::npos) e.expect = Expectation::Unrecoverable;
    }
  }
  return out;
}

}  // namespace d2wfp::corpus
