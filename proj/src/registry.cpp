#include "d2wfp/registry.hpp"

#include <algorithm>
#include <set>

#include "d2wfp/error.hpp"
#include "d2wfp/memscan.hpp"
#include "d2wfp/sqlite/format.hpp"

namespace d2wfp::registry {

namespace {

constexpr std::size_t kBaseBlock = 4096;
constexpr int kMaxDepth = 512;

std::string latin1_to_utf8(ByteView b) {
  std::string out;
  for (auto c : b) {
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back(static_cast<char>(0xc0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3f)));
    }
  }
  return out;
}

bool icontains(std::string_view hay, std::string_view needle) {
  return ascii_lower(hay).find(ascii_lower(needle)) != std::string::npos;
}

bool bytes_contain(ByteView data, ByteView needle) {
  return std::search(data.begin(), data.end(), needle.begin(), needle.end()) != data.end();
}

class Parser {
 public:
  explicit Parser(ByteView image) : img_(image) {}

  ParsedHive run() {
    if (img_.size() < 4 || !std::equal(img_.begin(), img_.begin() + 4, "regf"))
      throw Error(ErrorCode::NotHive, "missing regf signature");
    if (img_.size() < kBaseBlock + 32)
      throw Error(ErrorCode::CorruptHive, "image shorter than base block and one bin");

    std::uint32_t sum = 0;
    for (std::size_t i = 0; i < 508; i += 4) sum ^= load_le32(img_.data() + i);
    if (sum != load_le32(img_.data() + 508)) warn("base block checksum mismatch");

    const std::uint32_t bins = load_le32(img_.data() + 40);
    limit_ = std::min<std::uint64_t>(img_.size(), kBaseBlock + std::uint64_t{bins});
    if (limit_ <= kBaseBlock) limit_ = img_.size();

    const std::uint32_t root_off = load_le32(img_.data() + 36);
    auto root = parse_key(root_off, "", 0);
    if (!root) throw Error(ErrorCode::CorruptHive, "root key cell unreadable");
    out_.root = std::move(*root);
    return std::move(out_);
  }

 private:
  void warn(std::string w) { out_.warnings.push_back(std::move(w)); }

  // Returns the cell payload (after the size field) or nullopt.
  std::optional<ByteView> cell(std::uint32_t off) {
    const std::uint64_t abs = kBaseBlock + std::uint64_t{off};
    if (abs + 4 > limit_) return std::nullopt;
    const auto raw = static_cast<std::int32_t>(load_le32(img_.data() + abs));
    const std::int64_t size = raw < 0 ? -std::int64_t{raw} : raw;
    if (size < 8 || abs + static_cast<std::uint64_t>(size) > limit_) return std::nullopt;
    return img_.subspan(abs + 4, static_cast<std::size_t>(size) - 4);
  }

  std::optional<HiveKey> parse_key(std::uint32_t off, const std::string& parent, int depth) {
    if (depth > kMaxDepth || !visited_.insert(off).second) {
      warn("key cycle or excessive depth at cell " + std::to_string(off));
      return std::nullopt;
    }
    auto c = cell(off);
    if (!c || c->size() < 76 || (*c)[0] != 'n' || (*c)[1] != 'k') return std::nullopt;
    const ByteView nk = *c;
    const std::uint16_t flags = load_le16(nk.data() + 2);
    const std::uint16_t name_len = load_le16(nk.data() + 72);
    if (76u + name_len > nk.size()) return std::nullopt;

    HiveKey key;
    const ByteView name_bytes = nk.subspan(76, name_len);
    key.name = (flags & 0x20) ? latin1_to_utf8(name_bytes) : sqlite::utf16_to_utf8(name_bytes, false);
    if (depth > 0) key.path = parent.empty() ? key.name : parent + "\\" + key.name;
    const NormalizedTime t = filetime_to_utc(load_le64(nk.data() + 4));
    key.last_written = t.at;
    key.time_plausible = t.plausible;

    const std::uint32_t value_count = load_le32(nk.data() + 36);
    const std::uint32_t value_list = load_le32(nk.data() + 40);
    if (value_count > 0) read_values(value_list, value_count, key);

    const std::uint32_t subkey_count = load_le32(nk.data() + 20);
    const std::uint32_t subkey_list = load_le32(nk.data() + 28);
    if (subkey_count > 0) {
      std::vector<std::uint32_t> offsets;
      collect_subkeys(subkey_list, offsets, 0);
      if (offsets.size() != subkey_count)
        warn("key " + key.path + ": subkey count " + std::to_string(subkey_count) + ", list has " +
             std::to_string(offsets.size()));
      for (auto so : offsets) {
        auto sub = parse_key(so, key.path, depth + 1);
        if (sub) {
          key.subkeys.push_back(std::move(*sub));
        } else {
          warn("key " + key.path + ": unreadable subkey cell " + std::to_string(so));
        }
      }
    }
    return key;
  }

  void collect_subkeys(std::uint32_t off, std::vector<std::uint32_t>& out, int depth) {
    auto c = cell(off);
    if (!c || c->size() < 4 || depth > 2) {
      warn("unreadable subkey list at cell " + std::to_string(off));
      return;
    }
    const ByteView l = *c;
    const std::uint16_t n = load_le16(l.data() + 2);
    const char a = static_cast<char>(l[0]), b = static_cast<char>(l[1]);
    std::size_t stride;
    if ((a == 'l' && (b == 'f' || b == 'h'))) {
      stride = 8;
    } else if ((a == 'l' && b == 'i') || (a == 'r' && b == 'i')) {
      stride = 4;
    } else {
      warn("unknown subkey list signature at cell " + std::to_string(off));
      return;
    }
    if (4 + std::size_t{n} * stride > l.size()) {
      warn("subkey list overruns its cell at " + std::to_string(off));
      return;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t target = load_le32(l.data() + 4 + i * stride);
      if (a == 'r') {
        collect_subkeys(target, out, depth + 1);
      } else {
        out.push_back(target);
      }
    }
  }

  void read_values(std::uint32_t list_off, std::uint32_t count, HiveKey& key) {
    auto c = cell(list_off);
    if (!c || std::size_t{count} * 4 > c->size()) {
      warn("key " + key.path + ": unreadable value list");
      return;
    }
    for (std::uint32_t i = 0; i < count; ++i) {
      const std::uint32_t voff = load_le32(c->data() + 4 * i);
      auto v = read_value(voff);
      if (v) {
        key.values.push_back(std::move(*v));
      } else {
        warn("key " + key.path + ": unreadable value cell " + std::to_string(voff));
      }
    }
  }

  std::optional<HiveValue> read_value(std::uint32_t off) {
    auto c = cell(off);
    if (!c || c->size() < 20 || (*c)[0] != 'v' || (*c)[1] != 'k') return std::nullopt;
    const ByteView vk = *c;
    const std::uint16_t name_len = load_le16(vk.data() + 2);
    const std::uint32_t raw_size = load_le32(vk.data() + 4);
    const std::uint32_t data_off = load_le32(vk.data() + 8);
    const std::uint16_t flags = load_le16(vk.data() + 16);
    if (20u + name_len > vk.size()) return std::nullopt;

    HiveValue v;
    const ByteView name_bytes = vk.subspan(20, name_len);
    v.name = (flags & 0x1) ? latin1_to_utf8(name_bytes) : sqlite::utf16_to_utf8(name_bytes, false);
    v.type = load_le32(vk.data() + 12);

    const std::uint32_t size = raw_size & 0x7fffffffu;
    if (raw_size & 0x80000000u) {
      v.data.assign(vk.begin() + 8, vk.begin() + 8 + std::min<std::uint32_t>(size, 4));
      return v;
    }
    if (size == 0) return v;
    auto d = cell(data_off);
    if (!d) {
      warn("value " + v.name + ": unreadable data cell");
      v.truncated = true;
      return v;
    }
    if (d->size() >= 2 && (*d)[0] == 'd' && (*d)[1] == 'b') {
      warn("value " + v.name + ": big-data cell skipped");
      v.truncated = true;
      return v;
    }
    std::size_t take = std::min<std::size_t>(size, d->size());
    if (take < size) v.truncated = true;
    if (take > kMaxValueData) {
      take = kMaxValueData;
      v.truncated = true;
    }
    v.data.assign(d->begin(), d->begin() + take);
    return v;
  }

  ByteView img_;
  std::uint64_t limit_ = 0;
  std::set<std::uint32_t> visited_;
  ParsedHive out_;
};

const Bytes& tor_ascii() {
  static const Bytes b = [] {
    std::string_view s = "Tor Browser";
    return Bytes(s.begin(), s.end());
  }();
  return b;
}

const Bytes& tor_utf16() {
  static const Bytes b = [] {
    Bytes out;
    for (char c : std::string_view("Tor Browser")) {
      out.push_back(static_cast<std::uint8_t>(c));
      out.push_back(0);
    }
    return out;
  }();
  return b;
}

bool mentions_tor(ByteView data) {
  return bytes_contain(data, tor_ascii()) || bytes_contain(data, tor_utf16());
}

bool tor_program(std::string_view name) {
  return icontains(name, "tor browser") || icontains(name, "torbrowser") ||
         icontains(name, "\\tor.exe") || icontains(name, "torproject");
}

bool is_string_type(std::uint32_t t) {
  return t == kRegSz || t == kRegExpandSz || t == kRegMultiSz;
}

void walk(const HiveKey& key, std::vector<ExecutionIndicator>& out) {
  const bool userassist = icontains(key.path, "\\UserAssist\\") && ascii_lower(key.name) == "count";
  const bool uninstall = icontains(key.path, "\\Uninstall\\");
  const bool muicache = icontains(key.path, "MuiCache");

  std::set<const HiveValue*> claimed;
  bool key_claimed = false;

  if (userassist) {
    for (const auto& v : key.values) {
      const std::string program = rot13(v.name);
      if (!tor_program(program) || v.data.size() < 8) continue;
      ExecutionIndicator ind;
      ind.source = IndicatorSource::UserAssist;
      ind.program = program;
      ind.key_path = key.path;
      ind.value_name = v.name;
      ind.key_written = key.last_written;
      ind.run_count = load_le32(v.data.data() + 4);
      if (v.data.size() >= 68) {
        const std::uint64_t ft = load_le64(v.data.data() + 60);
        if (ft != 0) ind.last_run = filetime_to_utc(ft).at;
      }
      out.push_back(std::move(ind));
      claimed.insert(&v);
    }
  }

  if (uninstall) {
    for (const auto& v : key.values) {
      if (ascii_lower(v.name) != "displayname" || !is_string_type(v.type)) continue;
      const std::string name = value_text(v);
      if (!icontains(name, "tor browser")) continue;
      ExecutionIndicator ind;
      ind.source = IndicatorSource::UninstallKey;
      ind.program = name;
      ind.key_path = key.path;
      ind.value_name = v.name;
      ind.key_written = key.last_written;
      out.push_back(std::move(ind));
      claimed.insert(&v);
      key_claimed = true;
    }
  }

  const IndicatorSource hit_source = muicache ? IndicatorSource::MuiCache : IndicatorSource::PathHit;
  if (!key_claimed && mentions_tor(as_bytes(key.name))) {
    ExecutionIndicator ind;
    ind.source = hit_source;
    ind.program = key.name;
    ind.key_path = key.path;
    ind.key_written = key.last_written;
    out.push_back(std::move(ind));
  }
  for (const auto& v : key.values) {
    if (claimed.count(&v)) continue;
    const bool in_name = mentions_tor(as_bytes(v.name));
    if (!in_name && !mentions_tor(v.data)) continue;
    ExecutionIndicator ind;
    ind.source = hit_source;
    ind.program = in_name ? v.name : (is_string_type(v.type) ? value_text(v) : v.name);
    if (ind.program.size() > 260) ind.program.resize(260);
    ind.key_path = key.path;
    ind.value_name = v.name;
    ind.key_written = key.last_written;
    out.push_back(std::move(ind));
  }

  for (const auto& sub : key.subkeys) walk(sub, out);
}

void flatten_into(const HiveKey& key, std::vector<FlatValue>& out) {
  for (const auto& v : key.values) out.push_back({key.path, v.name, v.type, v.data});
  for (const auto& s : key.subkeys) flatten_into(s, out);
}

}  // namespace

const HiveKey* HiveKey::find(std::string_view relative_path) const {
  const HiveKey* cur = this;
  std::size_t pos = 0;
  while (pos < relative_path.size()) {
    auto next = relative_path.find('\\', pos);
    if (next == std::string_view::npos) next = relative_path.size();
    const std::string part = ascii_lower(relative_path.substr(pos, next - pos));
    const HiveKey* found = nullptr;
    for (const auto& s : cur->subkeys)
      if (ascii_lower(s.name) == part) {
        found = &s;
        break;
      }
    if (!found) return nullptr;
    cur = found;
    pos = next + 1;
  }
  return cur;
}

ParsedHive parse_hive(ByteView image) { return Parser(image).run(); }

std::string rot13(std::string_view text) {
  std::string out(text);
  for (auto& c : out) {
    if (c >= 'a' && c <= 'z') {
      c = static_cast<char>('a' + (c - 'a' + 13) % 26);
    } else if (c >= 'A' && c <= 'Z') {
      c = static_cast<char>('A' + (c - 'A' + 13) % 26);
    }
  }
  return out;
}

std::string value_text(const HiveValue& value) {
  std::string s = sqlite::utf16_to_utf8(ByteView(value.data.data(), value.data.size() & ~std::size_t{1}), false);
  if (value.type == kRegMultiSz) {
    while (!s.empty() && s.back() == '\0') s.pop_back();
    std::replace(s.begin(), s.end(), '\0', '\n');
    return s;
  }
  const auto nul = s.find('\0');
  if (nul != std::string::npos) s.resize(nul);
  return s;
}

std::string_view to_string(IndicatorSource s) noexcept {
  switch (s) {
    case IndicatorSource::UserAssist: return "userassist";
    case IndicatorSource::UninstallKey: return "uninstall-key";
    case IndicatorSource::MuiCache: return "mui-cache";
    case IndicatorSource::PathHit: return "path-hit";
  }
  return "path-hit";
}

std::vector<ExecutionIndicator> find_tor_indicators(const HiveKey& root) {
  std::vector<ExecutionIndicator> out;
  walk(root, out);
  return out;
}

std::vector<FlatValue> flatten(const HiveKey& root) {
  std::vector<FlatValue> out;
  flatten_into(root, out);
  std::sort(out.begin(), out.end());
  return out;
}

HiveDiff diff_hives(const HiveKey& before, const HiveKey& after) {
  const auto a = flatten(before);
  const auto b = flatten(after);
  HiveDiff d;
  std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(d.added));
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(d.removed));
  return d;
}

std::vector<Artifact> hive_artifacts(const HiveKey& root, std::string_view evidence_id,
                                     std::string_view store) {
  std::vector<Artifact> out;
  for (const auto& ind : find_tor_indicators(root)) {
    std::string locator = std::string(store) + "!" + ind.key_path + ":" + ind.value_name + "#" +
                          std::string(to_string(ind.source));
    Artifact a = make_artifact(ArtifactKind::UsageSession, Category::SecurityLogins,
                               Location::UserSystemConfig, RecoveryState::Live, ind.program,
                               evidence_id, std::move(locator));
    a.set_attribute("source", std::string(to_string(ind.source)));
    a.set_attribute("key_path", ind.key_path);
    if (ind.run_count) a.set_attribute("run_count", std::to_string(*ind.run_count));
    if (ind.last_run) {
      add_timestamp(a, "last-run", *ind.last_run);
    } else if (ind.source == IndicatorSource::UninstallKey) {
      add_timestamp(a, "key-written", ind.key_written);
    }
    out.push_back(std::move(a));
  }

  memscan::PatternSet patterns;
  patterns.email = false;
  patterns.keywords.clear();
  for (const auto& fv : flatten(root)) {
    if (fv.data.empty()) continue;
    const auto hits = memscan::scan(fv.data, patterns, {16, fv.data.size() + 1});
    const std::string where = std::string(store) + "!" + fv.key_path + ":" + fv.name;
    for (auto& a : memscan::classify_hits(hits, evidence_id, where, Location::UserSystemConfig,
                                          RecoveryState::Live)) {
      a.set_attribute("key_path", fv.key_path);
      a.set_attribute("value_name", fv.name);
      out.push_back(std::move(a));
    }
  }
  return out;
}

}  // namespace d2wfp::registry
