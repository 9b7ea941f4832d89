#include "d2wfp/browser.hpp"

#include <algorithm>
#include <map>
#include <optional>

#include <nlohmann/json.hpp>

#include "d2wfp/sqlite/carver.hpp"
#include "d2wfp/sqlite/database.hpp"
#include "d2wfp/text.hpp"

namespace fs = std::filesystem;

namespace d2wfp::browser {

namespace {

using sqlite::Value;

constexpr std::string_view kPlaces = "places.sqlite";
constexpr std::string_view kCookies = "cookies.sqlite";
constexpr std::string_view kForms = "formhistory.sqlite";
constexpr std::string_view kLogins = "logins.json";
constexpr std::string_view kCache = "cache2";

constexpr std::size_t kChunkSize = 256 * 1024;

void warn(std::vector<std::string>* warnings, std::string msg) {
  if (warnings) warnings->push_back(std::move(msg));
}

const std::int64_t* as_int(const Value& v) { return std::get_if<std::int64_t>(&v); }

std::string as_text(const Value& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  return {};
}

// Zero means "never" in these stores.
void stamp(Artifact& a, const std::string& label, const Value& v, EpochKind kind) {
  const auto* raw = as_int(v);
  if (!raw || *raw == 0) return;
  try {
    add_timestamp(a, label, normalize_timestamp(*raw, kind).at);
  } catch (const Error&) {
    a.set_attribute(label + "-raw", std::to_string(*raw));
  }
}

// Column lookup that tolerates short or undecoded rows.
class Row {
 public:
  Row(const sqlite::TableShape& shape, const std::vector<Value>& columns, const std::vector<bool>* decoded = nullptr)
      : shape_(shape), columns_(columns), decoded_(decoded) {}

  const Value& operator[](std::string_view column) const {
    static const Value kNull;
    const int i = shape_.column_index(column);
    if (i < 0 || static_cast<std::size_t>(i) >= columns_.size()) return kNull;
    if (decoded_ && static_cast<std::size_t>(i) < decoded_->size() && !(*decoded_)[static_cast<std::size_t>(i)])
      return kNull;
    return columns_[static_cast<std::size_t>(i)];
  }

 private:
  const sqlite::TableShape& shape_;
  const std::vector<Value>& columns_;
  const std::vector<bool>* decoded_;
};

struct Store {
  std::string name;
  sqlite::Database db;
  std::vector<sqlite::CarvedRecord> carved;

  std::optional<sqlite::TableShape> shape(std::string_view table) const { return db.table_shape(table); }
};

Store open_store(const ProfileLayout& profile, std::string_view name, const ExtractOptions& options,
                 std::vector<std::string>* warnings) {
  if (!profile.has(name)) throw Error(ErrorCode::StoreAbsent, std::string(name) + " not present");
  Store s{std::string(name), sqlite::Database::open(profile.root / name), {}};
  if (options.carve) {
    auto res = sqlite::carve_all(s.db, {options.threshold});
    if (res.skipped_pages) warn(warnings, s.name + ": " + std::to_string(res.skipped_pages) + " pages skipped while carving");
    s.carved = std::move(res.records);
  }
  return s;
}

std::string live_locator(const Store& s, std::string_view table, std::int64_t rowid) {
  return s.name + "#" + std::string(table) + ":" + std::to_string(rowid);
}

std::string carved_locator(const Store& s, const sqlite::CarvedRecord& r) {
  return s.name + "#" + std::string(sqlite::to_string(r.origin)) + ":" + r.source + ":p" + std::to_string(r.page) +
         "+" + std::to_string(r.offset);
}

Artifact live_artifact(const ProfileLayout& profile, const ExtractOptions& options, ArtifactKind kind, Category category,
                       std::string value, std::string locator) {
  auto a = make_artifact(kind, category, Location::FileSystem, RecoveryState::Live, std::move(value),
                         options.evidence_id, options.locator_prefix + locator);
  a.tor = profile.tor;
  return a;
}

Artifact carved_artifact(const ProfileLayout& profile, const ExtractOptions& options, const Store& s,
                         const sqlite::CarvedRecord& r, ArtifactKind kind, Category category, std::string value) {
  auto a = make_artifact(kind, category, Location::FileSystem, RecoveryState::Carved, std::move(value),
                         options.evidence_id, options.locator_prefix + carved_locator(s, r));
  a.tor = profile.tor;
  a.plausibility = r.plausibility;
  a.set_attribute("table", r.table_name);
  if (!r.complete) a.set_attribute("complete", "false");
  return a;
}

template <typename F>
void each_carved(const Store& s, std::string_view table, F&& f) {
  const auto shape = s.shape(table);
  if (!shape) return;
  for (const auto& r : s.carved)
    if (r.table_name == table) f(r, Row(*shape, r.columns, &r.decoded));
}

std::string cookie_value(const Row& row) {
  return "name=" + as_text(row["name"]) + "; host=" + as_text(row["host"]) + "; path=" + as_text(row["path"]);
}

}  // namespace

bool is_search_field(std::string_view fieldname) noexcept {
  return std::find(kSearchFieldNames.begin(), kSearchFieldNames.end(), fieldname) != kSearchFieldNames.end();
}

bool ProfileLayout::has(std::string_view store) const {
  return std::find(stores.begin(), stores.end(), store) != stores.end();
}

ProfileLayout detect_profile(const fs::path& root) {
  ProfileLayout p;
  p.root = root;
  for (auto name : {kPlaces, kCookies, kForms, kLogins})
    if (fs::is_regular_file(root / name)) p.stores.emplace_back(name);
  if (fs::is_directory(root / kCache / "entries")) p.stores.emplace_back(kCache);

  p.tor = fs::absolute(root).generic_string().find("Tor Browser") != std::string::npos;
  const auto ext = root / "extensions.json";
  if (!p.tor && fs::is_regular_file(ext)) {
    const auto doc = nlohmann::json::parse(read_text_file(ext), nullptr, false);
    if (!doc.is_discarded() && doc.contains("addons") && doc["addons"].is_array())
      for (const auto& addon : doc["addons"])
        if (addon.is_object() && addon.value("id", "").find("torbutton") != std::string::npos) p.tor = true;
  }
  return p;
}

std::vector<Artifact> extract_history(const ProfileLayout& profile, const ExtractOptions& options,
                                      std::vector<std::string>* warnings) {
  const auto s = open_store(profile, kPlaces, options, warnings);
  const auto places_shape = s.shape("moz_places");
  const auto visits_shape = s.shape("moz_historyvisits");
  if (!places_shape || !visits_shape) return {};

  std::map<std::int64_t, sqlite::LiveRecord> places;
  for (auto& r : s.db.read_table("moz_places")) places.emplace(r.rowid, std::move(r));

  std::vector<Artifact> out;
  for (const auto& v : s.db.read_table("moz_historyvisits")) {
    const Row visit(*visits_shape, v.columns);
    const auto* place_id = as_int(visit["place_id"]);
    const auto it = place_id ? places.find(*place_id) : places.end();
    if (it == places.end()) {
      warn(warnings, "moz_historyvisits:" + std::to_string(v.rowid) + " has no place");
      continue;
    }
    const Row place(*places_shape, it->second.columns);
    auto a = live_artifact(profile, options, ArtifactKind::Urls, Category::BrowsingHistory, as_text(place["url"]),
                           live_locator(s, "moz_historyvisits", v.rowid));
    stamp(a, "visit", visit["visit_date"], EpochKind::PrtimeMicros);
    a.set_attribute("place_id", std::to_string(*place_id));
    a.set_attribute("title", as_text(place["title"]));
    a.set_attribute("visit_type", as_text(visit["visit_type"]));
    out.push_back(std::move(a));
  }

  // deleted places that had been visited; bookmark and download places never were
  each_carved(s, "moz_places", [&](const sqlite::CarvedRecord& r, const Row& row) {
    const auto url = as_text(row["url"]);
    const auto* count = as_int(row["visit_count"]);
    const bool visited = as_int(row["last_visit_date"]) || (count && *count > 0);
    if (url.empty() || !visited) return;
    auto a = carved_artifact(profile, options, s, r, ArtifactKind::Urls, Category::BrowsingHistory, url);
    stamp(a, "visit", row["last_visit_date"], EpochKind::PrtimeMicros);
    a.set_attribute("title", as_text(row["title"]));
    out.push_back(std::move(a));
  });
  // deleted visits whose place is still live
  each_carved(s, "moz_historyvisits", [&](const sqlite::CarvedRecord& r, const Row& row) {
    const auto* place_id = as_int(row["place_id"]);
    const auto it = place_id ? places.find(*place_id) : places.end();
    if (it == places.end()) return;
    const Row place(*places_shape, it->second.columns);
    auto a = carved_artifact(profile, options, s, r, ArtifactKind::Urls, Category::BrowsingHistory,
                             as_text(place["url"]));
    stamp(a, "visit", row["visit_date"], EpochKind::PrtimeMicros);
    a.set_attribute("place_id", std::to_string(*place_id));
    out.push_back(std::move(a));
  });
  return out;
}

std::vector<Artifact> extract_bookmarks(const ProfileLayout& profile, const ExtractOptions& options,
                                        std::vector<std::string>* warnings) {
  const auto s = open_store(profile, kPlaces, options, warnings);
  const auto shape = s.shape("moz_bookmarks");
  const auto places_shape = s.shape("moz_places");
  if (!shape || !places_shape) return {};

  std::map<std::int64_t, std::string> urls;
  for (const auto& r : s.db.read_table("moz_places")) urls[r.rowid] = as_text(Row(*places_shape, r.columns)["url"]);

  std::vector<Artifact> out;
  auto fill = [&](Artifact& a, const Row& row) {
    stamp(a, "added", row["dateAdded"], EpochKind::PrtimeMicros);
    if (const auto* fk = as_int(row["fk"])) {
      const auto it = urls.find(*fk);
      if (it != urls.end()) a.set_attribute("url", it->second);
    }
  };
  for (const auto& r : s.db.read_table("moz_bookmarks")) {
    const Row row(*shape, r.columns);
    const auto* type = as_int(row["type"]);
    if (!type || *type != 1) continue;  // folders and separators
    auto title = as_text(row["title"]);
    if (const auto* fk = as_int(row["fk"]); title.empty() && fk && urls.count(*fk)) title = urls[*fk];
    auto a = live_artifact(profile, options, ArtifactKind::Bookmarks, Category::BrowsingHistory, std::move(title),
                           live_locator(s, "moz_bookmarks", r.rowid));
    fill(a, row);
    out.push_back(std::move(a));
  }
  each_carved(s, "moz_bookmarks", [&](const sqlite::CarvedRecord& r, const Row& row) {
    const auto* type = as_int(row["type"]);
    const auto title = as_text(row["title"]);
    if ((type && *type != 1) || title.empty()) return;
    auto a = carved_artifact(profile, options, s, r, ArtifactKind::Bookmarks, Category::BrowsingHistory, title);
    fill(a, row);
    out.push_back(std::move(a));
  });
  return out;
}

std::vector<Artifact> extract_downloads(const ProfileLayout& profile, const ExtractOptions& options,
                                        std::vector<std::string>* warnings) {
  const auto s = open_store(profile, kPlaces, options, warnings);
  const auto annos_shape = s.shape("moz_annos");
  const auto attrs_shape = s.shape("moz_anno_attributes");
  const auto places_shape = s.shape("moz_places");
  if (!annos_shape || !attrs_shape || !places_shape) return {};

  std::optional<std::int64_t> dest_attr, meta_attr;
  for (const auto& r : s.db.read_table("moz_anno_attributes")) {
    const auto name = as_text(Row(*attrs_shape, r.columns)["name"]);
    if (name == "downloads/destinationFileURI") dest_attr = r.rowid;
    if (name == "downloads/metaData") meta_attr = r.rowid;
  }
  std::map<std::int64_t, std::string> urls;
  for (const auto& r : s.db.read_table("moz_places")) urls[r.rowid] = as_text(Row(*places_shape, r.columns)["url"]);

  struct Anno {
    std::int64_t place = 0;
    std::string content;
    Value added;
  };
  auto collect = [&](const Row& row, std::optional<std::int64_t> want, bool dest) -> std::optional<Anno> {
    const auto* attr = as_int(row["anno_attribute_id"]);
    const auto* place = as_int(row["place_id"]);
    const auto content = as_text(row["content"]);
    const bool match = attr && want ? *attr == *want
                                    : dest ? content.rfind("file://", 0) == 0 : content.find("endTime") != std::string::npos;
    if (!match || !place) return std::nullopt;
    return Anno{*place, content, row["dateAdded"]};
  };

  // end times, live first so a carved copy never shadows the live one
  std::map<std::int64_t, std::string> meta;
  const auto live_annos = s.db.read_table("moz_annos");
  for (const auto& r : live_annos)
    if (auto m = collect(Row(*annos_shape, r.columns), meta_attr, false)) meta.emplace(m->place, m->content);
  each_carved(s, "moz_annos", [&](const sqlite::CarvedRecord&, const Row& row) {
    if (auto m = collect(row, meta_attr, false)) meta.emplace(m->place, m->content);
  });

  auto fill = [&](Artifact& a, const Anno& d) {
    const auto it = meta.find(d.place);
    bool ended = false;
    if (it != meta.end()) {
      const auto doc = nlohmann::json::parse(it->second, nullptr, false);
      if (!doc.is_discarded() && doc.is_object() && doc.contains("endTime") && doc["endTime"].is_number_integer()) {
        stamp(a, "download-end", Value(doc["endTime"].get<std::int64_t>()), EpochKind::UnixMillis);
        ended = true;
      }
      if (!doc.is_discarded() && doc.is_object() && doc.contains("fileSize"))
        a.set_attribute("file_size", doc["fileSize"].dump());
    }
    if (!ended) stamp(a, "added", d.added, EpochKind::PrtimeMicros);
    const auto u = urls.find(d.place);
    if (u != urls.end()) a.set_attribute("source", u->second);
  };

  std::vector<Artifact> out;
  for (const auto& r : live_annos) {
    const auto d = collect(Row(*annos_shape, r.columns), dest_attr, true);
    if (!d) continue;
    auto a = live_artifact(profile, options, ArtifactKind::DownloadFiles, Category::Downloads, d->content,
                           live_locator(s, "moz_annos", r.rowid));
    fill(a, *d);
    out.push_back(std::move(a));
  }
  each_carved(s, "moz_annos", [&](const sqlite::CarvedRecord& r, const Row& row) {
    const auto d = collect(row, dest_attr, true);
    if (!d || d->content.empty()) return;
    auto a = carved_artifact(profile, options, s, r, ArtifactKind::DownloadFiles, Category::Downloads, d->content);
    fill(a, *d);
    out.push_back(std::move(a));
  });
  return out;
}

std::vector<Artifact> extract_cookies(const ProfileLayout& profile, const ExtractOptions& options,
                                      std::vector<std::string>* warnings) {
  const auto s = open_store(profile, kCookies, options, warnings);
  const auto shape = s.shape("moz_cookies");
  if (!shape) return {};
  auto fill = [](Artifact& a, const Row& row) {
    stamp(a, "created", row["creationTime"], EpochKind::PrtimeMicros);
    stamp(a, "accessed", row["lastAccessed"], EpochKind::PrtimeMicros);
    a.set_attribute("host", as_text(row["host"]));
    a.set_attribute("name", as_text(row["name"]));
    a.set_attribute("expiry", as_text(row["expiry"]));
  };
  std::vector<Artifact> out;
  for (const auto& r : s.db.read_table("moz_cookies")) {
    const Row row(*shape, r.columns);
    auto a = live_artifact(profile, options, ArtifactKind::Cookies, Category::CacheTemp, cookie_value(row),
                           live_locator(s, "moz_cookies", r.rowid));
    fill(a, row);
    out.push_back(std::move(a));
  }
  each_carved(s, "moz_cookies", [&](const sqlite::CarvedRecord& r, const Row& row) {
    if (as_text(row["name"]).empty() && as_text(row["host"]).empty()) return;
    auto a = carved_artifact(profile, options, s, r, ArtifactKind::Cookies, Category::CacheTemp, cookie_value(row));
    fill(a, row);
    out.push_back(std::move(a));
  });
  return out;
}

std::vector<Artifact> extract_form_history(const ProfileLayout& profile, const ExtractOptions& options,
                                           std::vector<std::string>* warnings) {
  const auto s = open_store(profile, kForms, options, warnings);
  const auto shape = s.shape("moz_formhistory");
  if (!shape) return {};
  auto kind_of = [](const Row& row) {
    return is_search_field(as_text(row["fieldname"])) ? ArtifactKind::SearchQueries : ArtifactKind::UsageSession;
  };
  auto fill = [](Artifact& a, const Row& row) {
    stamp(a, "first-used", row["firstUsed"], EpochKind::PrtimeMicros);
    stamp(a, "last-used", row["lastUsed"], EpochKind::PrtimeMicros);
    a.set_attribute("fieldname", as_text(row["fieldname"]));
    a.set_attribute("times_used", as_text(row["timesUsed"]));
  };
  std::vector<Artifact> out;
  for (const auto& r : s.db.read_table("moz_formhistory")) {
    const Row row(*shape, r.columns);
    auto a = live_artifact(profile, options, kind_of(row), Category::SqliteDbForm, as_text(row["value"]),
                           live_locator(s, "moz_formhistory", r.rowid));
    fill(a, row);
    out.push_back(std::move(a));
  }
  each_carved(s, "moz_formhistory", [&](const sqlite::CarvedRecord& r, const Row& row) {
    const auto value = as_text(row["value"]);
    if (value.empty()) return;
    auto a = carved_artifact(profile, options, s, r, kind_of(row), Category::SqliteDbForm, value);
    fill(a, row);
    out.push_back(std::move(a));
  });
  return out;
}

std::vector<Artifact> extract_logins(const ProfileLayout& profile, const ExtractOptions& options,
                                     std::vector<std::string>* warnings) {
  if (!profile.has(kLogins)) throw Error(ErrorCode::StoreAbsent, "logins.json not present");
  const auto doc = nlohmann::json::parse(read_text_file(profile.root / kLogins), nullptr, false);
  if (doc.is_discarded() || !doc.is_object())
    throw ExtractionError(ErrorCode::ParseError, "logins.json is not a JSON object", {});
  if (!doc.contains("logins") || !doc["logins"].is_array())
    throw ExtractionError(ErrorCode::ParseError, "logins.json has no logins array", {});

  std::vector<Artifact> out;
  std::size_t bad = 0;
  const auto& logins = doc["logins"];
  for (std::size_t i = 0; i < logins.size(); ++i) {
    const auto& entry = logins[i];
    if (!entry.is_object() || !entry.contains("hostname") || !entry["hostname"].is_string()) {
      ++bad;
      warn(warnings, "logins[" + std::to_string(i) + "] malformed");
      continue;
    }
    auto a = live_artifact(profile, options, ArtifactKind::Usernames, Category::SecurityLogins,
                           entry["hostname"].get<std::string>(), std::string(kLogins) + "#logins[" + std::to_string(i) + "]");
    for (const auto& [field, label] : {std::pair{"timeCreated", "created"}, std::pair{"timeLastUsed", "last-used"}})
      if (entry.contains(field) && entry[field].is_number_integer())
        stamp(a, label, Value(entry[field].get<std::int64_t>()), EpochKind::UnixMillis);
    // secrets stay encrypted; only their presence is recorded
    for (const auto& [field, attr] : {std::pair{"encryptedUsername", "encrypted_username"},
                                      std::pair{"encryptedPassword", "encrypted_password"},
                                      std::pair{"formSubmitURL", "form_submit_url"},
                                      std::pair{"usernameField", "username_field"}})
      if (entry.contains(field) && entry[field].is_string()) a.set_attribute(attr, entry[field].get<std::string>());
    if (entry.contains("timesUsed")) a.set_attribute("times_used", entry["timesUsed"].dump());
    out.push_back(std::move(a));
  }
  if (bad) throw ExtractionError(ErrorCode::ParseError, std::to_string(bad) + " malformed login entries", std::move(out));
  return out;
}

std::string cache_key_url(std::string_view key) {
  const auto colon = key.find(':');
  // a bare URL has "://" right after its scheme; tag prefixes end with ":"
  if (colon == std::string_view::npos || key.substr(colon, 3) == "://") return std::string(key);
  return std::string(key.substr(colon + 1));
}

CacheEntryMeta parse_cache2_entry(ByteView file) {
  if (file.size() < 4) throw Error(ErrorCode::Malformed, "entry shorter than its trailer");
  const std::size_t meta_pos = file.size() - 4;
  const std::size_t meta_offset = load_be32(file.data() + meta_pos);
  if (meta_offset > meta_pos) throw Error(ErrorCode::Malformed, "metadata offset past end");
  const std::size_t hashes = (meta_offset + kChunkSize - 1) / kChunkSize;
  const std::size_t hdr = meta_offset + 4 + 2 * hashes;
  if (hdr + 28 > meta_pos) throw Error(ErrorCode::Malformed, "metadata header truncated");

  CacheEntryMeta m;
  auto field = [&](std::size_t i) { return load_be32(file.data() + hdr + 4 * i); };
  m.version = field(0);
  if (m.version < 1 || m.version > 3) throw Error(ErrorCode::Malformed, "unknown version " + std::to_string(m.version));
  m.fetch_count = field(1);
  m.last_fetched = field(2);
  m.last_modified = field(3);
  m.frecency = field(4);
  m.expiration = field(5);
  const std::size_t key_size = field(6);
  std::size_t key_offset = hdr + 28;
  if (m.version >= 2) {
    if (key_offset + 4 > meta_pos) throw Error(ErrorCode::Malformed, "metadata header truncated");
    m.flags = field(7);
    key_offset += 4;
  }
  const std::size_t elements = key_offset + key_size + 1;
  if (elements > meta_pos || file[elements - 1] != 0) throw Error(ErrorCode::Malformed, "key not terminated");
  m.key.assign(reinterpret_cast<const char*>(file.data() + key_offset), key_size);
  m.url = cache_key_url(m.key);

  // NUL-separated name/value pairs up to the trailer
  std::size_t p = elements;
  while (p < meta_pos) {
    const auto* base = reinterpret_cast<const char*>(file.data());
    const auto name_end = std::find(base + p, base + meta_pos, '\0') - base;
    if (static_cast<std::size_t>(name_end) >= meta_pos) break;
    const auto value_end = std::find(base + name_end + 1, base + meta_pos, '\0') - base;
    if (static_cast<std::size_t>(value_end) >= meta_pos) break;
    m.elements.emplace_back(std::string(base + p, base + name_end), std::string(base + name_end + 1, base + value_end));
    p = static_cast<std::size_t>(value_end) + 1;
  }
  return m;
}

std::vector<Artifact> extract_cache2(const ProfileLayout& profile, const ExtractOptions& options,
                                     std::vector<std::string>* warnings) {
  if (!profile.has(kCache)) throw Error(ErrorCode::StoreAbsent, "cache2/entries not present");
  const auto dir = profile.root / kCache / "entries";
  std::vector<fs::path> files;
  std::error_code ec;
  for (fs::directory_iterator it(dir, ec), end; !ec && it != end; it.increment(ec))
    if (it->is_regular_file(ec)) files.push_back(it->path());
  if (ec) throw Error(ErrorCode::IoError, "cannot list " + dir.string() + ": " + ec.message());
  std::sort(files.begin(), files.end());

  std::vector<Artifact> out;
  for (const auto& f : files) {
    const auto name = f.filename().string();
    CacheEntryMeta m;
    try {
      m = parse_cache2_entry(read_file(f));
    } catch (const Error& e) {
      warn(warnings, "cache2/entries/" + name + ": " + e.what());
      continue;
    }
    auto a = live_artifact(profile, options, ArtifactKind::WebsiteContent, Category::CacheTemp, m.url,
                           "cache2/entries/" + name);
    stamp(a, "fetched", Value(std::int64_t{m.last_fetched}), EpochKind::UnixSeconds);
    stamp(a, "modified", Value(std::int64_t{m.last_modified}), EpochKind::UnixSeconds);
    a.set_attribute("fetch_count", std::to_string(m.fetch_count));
    a.set_attribute("key", m.key);
    out.push_back(std::move(a));
  }
  return out;
}

ProfileExtraction extract_profile(const ProfileLayout& profile, const ExtractOptions& options) {
  using Extractor = std::vector<Artifact> (*)(const ProfileLayout&, const ExtractOptions&, std::vector<std::string>*);
  static constexpr std::pair<std::string_view, Extractor> kExtractors[] = {
      {kPlaces, extract_history},  {kPlaces, extract_bookmarks},     {kPlaces, extract_downloads},
      {kCookies, extract_cookies}, {kForms, extract_form_history}, {kLogins, extract_logins},
      {kCache, extract_cache2},
  };
  ProfileExtraction out;
  for (const auto& [store, fn] : kExtractors) {
    try {
      auto got = fn(profile, options, &out.warnings);
      out.artifacts.insert(out.artifacts.end(), std::make_move_iterator(got.begin()), std::make_move_iterator(got.end()));
    } catch (const ExtractionError& e) {
      out.warnings.push_back(e.what());
      out.artifacts.insert(out.artifacts.end(), e.partial().begin(), e.partial().end());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::StoreAbsent) {
        if (std::find(out.absent.begin(), out.absent.end(), store) == out.absent.end()) out.absent.emplace_back(store);
      } else {
        out.warnings.push_back(std::string(store) + ": " + e.what());
      }
    }
  }
  return out;
}

}  // namespace d2wfp::browser
