#include <algorithm>
#include <map>
#include <memory>

#include "d2wfp/error.hpp"
#include "d2wfp/registry.hpp"
#include "d2wfp/text.hpp"
#include "internal.hpp"

namespace d2wfp::corpus {

using namespace detail;

namespace {

constexpr std::uint32_t kNone = 0xffffffffu;
constexpr std::string_view kUserAssistCount =
    "Software\\Microsoft\\Windows\\CurrentVersion\\Explorer\\UserAssist\\"
    "{CEBFF5CD-ACE2-4F4F-9178-9926F41749EA}\\Count";
constexpr std::string_view kUninstall = "Software\\Microsoft\\Windows\\CurrentVersion\\Uninstall";
constexpr std::string_view kTypedUrls = "Software\\Microsoft\\Internet Explorer\\TypedURLs";

std::uint64_t to_filetime(UtcTime t) {
  return static_cast<std::uint64_t>(t.micros * 10 + kEpochGap1601Seconds * 10'000'000);
}

struct Node {
  std::string name;
  UtcTime last_written;
  std::vector<HiveValueImage> values;
  std::map<std::string, std::unique_ptr<Node>> children;  // keyed by uppercase name
};

std::string upper(std::string_view s) {
  std::string u(s);
  for (auto& c : u)
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 32);
  return u;
}

class BinWriter {
 public:
  BinWriter() : bin_(32, 0) {}

  // Allocates an 8-aligned cell and returns its offset relative to the first bin.
  std::uint32_t alloc(std::size_t payload) {
    const std::size_t size = (payload + 4 + 7) & ~std::size_t{7};
    const auto off = static_cast<std::uint32_t>(bin_.size());
    bin_.resize(bin_.size() + size, 0);
    store_le32(&bin_[off], static_cast<std::uint32_t>(-static_cast<std::int32_t>(size)));
    return off;
  }
  std::uint8_t* at(std::uint32_t cell) { return &bin_[cell + 4]; }

  std::uint32_t write_key(const Node& n, std::uint32_t parent, bool root) {
    const std::uint32_t nk = alloc(76 + n.name.size());
    std::uint32_t value_list = kNone;
    std::size_t max_vname = 0, max_vdata = 0;
    if (!n.values.empty()) {
      std::vector<std::uint32_t> offs;
      for (const auto& v : n.values) {
        offs.push_back(write_value(v));
        max_vname = std::max(max_vname, v.name.size() * 2);
        max_vdata = std::max(max_vdata, v.data.size());
      }
      value_list = alloc(4 * offs.size());
      for (std::size_t i = 0; i < offs.size(); ++i) store_le32(at(value_list) + 4 * i, offs[i]);
    }

    std::uint32_t subkey_list = kNone;
    std::size_t max_sub = 0;
    if (!n.children.empty()) {
      std::vector<std::pair<std::uint32_t, std::string>> subs;
      for (const auto& [key, child] : n.children) {
        subs.emplace_back(write_key(*child, nk, false), child->name);
        max_sub = std::max(max_sub, child->name.size() * 2);
      }
      subkey_list = alloc(4 + 8 * subs.size());
      std::uint8_t* l = at(subkey_list);
      l[0] = 'l';
      l[1] = 'f';
      store_le16(l + 2, static_cast<std::uint16_t>(subs.size()));
      for (std::size_t i = 0; i < subs.size(); ++i) {
        store_le32(l + 4 + 8 * i, subs[i].first);
        for (std::size_t k = 0; k < 4 && k < subs[i].second.size(); ++k)
          l[8 + 8 * i + k] = static_cast<std::uint8_t>(subs[i].second[k]);
      }
    }

    std::uint8_t* p = at(nk);
    p[0] = 'n';
    p[1] = 'k';
    store_le16(p + 2, root ? 0x2c : 0x20);
    store_le64(p + 4, to_filetime(n.last_written));
    store_le32(p + 16, parent);
    store_le32(p + 20, static_cast<std::uint32_t>(n.children.size()));
    store_le32(p + 28, subkey_list);
    store_le32(p + 32, kNone);
    store_le32(p + 36, static_cast<std::uint32_t>(n.values.size()));
    store_le32(p + 40, value_list);
    store_le32(p + 44, kNone);
    store_le32(p + 48, kNone);
    store_le32(p + 52, static_cast<std::uint32_t>(max_sub));
    store_le32(p + 60, static_cast<std::uint32_t>(max_vname));
    store_le32(p + 64, static_cast<std::uint32_t>(max_vdata));
    store_le16(p + 72, static_cast<std::uint16_t>(n.name.size()));
    std::copy(n.name.begin(), n.name.end(), p + 76);
    return nk;
  }

  std::uint32_t write_value(const HiveValueImage& v) {
    const std::uint32_t vk = alloc(20 + v.name.size());
    std::uint32_t size_field = static_cast<std::uint32_t>(v.data.size());
    std::uint32_t data_field = 0;
    if (v.data.size() <= 4) {
      size_field |= 0x80000000u;
      std::uint8_t inline_bytes[4] = {0, 0, 0, 0};
      std::copy(v.data.begin(), v.data.end(), inline_bytes);
      data_field = load_le32(inline_bytes);
    } else {
      data_field = alloc(v.data.size());
      std::copy(v.data.begin(), v.data.end(), at(data_field));
    }
    std::uint8_t* p = at(vk);
    p[0] = 'v';
    p[1] = 'k';
    store_le16(p + 2, static_cast<std::uint16_t>(v.name.size()));
    store_le32(p + 4, size_field);
    store_le32(p + 8, data_field);
    store_le32(p + 12, v.type);
    store_le16(p + 16, v.name.empty() ? 0 : 1);
    std::copy(v.name.begin(), v.name.end(), p + 20);
    return vk;
  }

  Bytes finish(std::uint64_t filetime) {
    const std::size_t used = bin_.size();
    const std::size_t total = (used + 4095) & ~std::size_t{4095};
    bin_.resize(total, 0);
    if (total > used) store_le32(&bin_[used], static_cast<std::uint32_t>(total - used));  // free cell
    std::copy_n("hbin", 4, bin_.begin());
    store_le32(&bin_[4], 0);
    store_le32(&bin_[8], static_cast<std::uint32_t>(total));
    store_le64(&bin_[20], filetime);
    return std::move(bin_);
  }

 private:
  Bytes bin_;
};

Bytes binary_userassist(std::uint32_t count, UtcTime last_run) {
  Bytes b(72, 0);
  store_le32(&b[4], count);
  store_le32(&b[8], count);
  store_le32(&b[12], count * 60000u);
  for (int i = 0; i < 10; ++i) store_le32(&b[16 + 4 * i], 0xbf800000u);  // -1.0f slots
  store_le32(&b[56], 0xffffffffu);
  store_le64(&b[60], to_filetime(last_run));
  return b;
}

}  // namespace

Bytes encode_utf16le(std::string_view ascii, bool nul_terminate) {
  Bytes out;
  out.reserve(ascii.size() * 2 + 2);
  for (char c : ascii) {
    out.push_back(static_cast<std::uint8_t>(c));
    out.push_back(0);
  }
  if (nul_terminate) {
    out.push_back(0);
    out.push_back(0);
  }
  return out;
}

Bytes build_hive(std::vector<HiveKeyImage> keys, std::string_view root_name) {
  Node root;
  root.name = std::string(root_name);
  UtcTime newest{0};
  for (auto& k : keys) {
    Node* cur = &root;
    if (!k.path.empty()) {
      for (auto part : split(k.path, '\\')) {
        auto& slot = cur->children[upper(part)];
        if (!slot) {
          slot = std::make_unique<Node>();
          slot->name = std::string(part);
          slot->last_written = k.last_written;
        }
        cur = slot.get();
      }
    }
    cur->last_written = k.last_written;
    for (auto& v : k.values) cur->values.push_back(std::move(v));
    newest = std::max(newest, k.last_written);
  }
  if (root.last_written.micros == 0) root.last_written = newest;

  BinWriter w;
  const std::uint32_t root_cell = w.write_key(root, 0, true);
  const std::uint64_t ft = to_filetime(newest);
  Bytes bins = w.finish(ft);

  Bytes image(4096, 0);
  std::copy_n("regf", 4, image.begin());
  store_le32(&image[4], 1);
  store_le32(&image[8], 1);
  store_le64(&image[12], ft);
  store_le32(&image[20], 1);
  store_le32(&image[24], 5);
  store_le32(&image[28], 0);
  store_le32(&image[32], 1);
  store_le32(&image[36], root_cell);
  store_le32(&image[40], static_cast<std::uint32_t>(bins.size()));
  store_le32(&image[44], 1);
  const Bytes fname = encode_utf16le("NTUSER.DAT");
  std::copy(fname.begin(), fname.end(), image.begin() + 48);
  std::uint32_t sum = 0;
  for (std::size_t i = 0; i < 508; i += 4) sum ^= load_le32(&image[i]);
  store_le32(&image[508], sum);
  image.insert(image.end(), bins.begin(), bins.end());
  return image;
}

std::vector<HiveKeyImage> hive_keys_for(const CorpusSpec& spec) {
  Rng rng(spec.seed, kHive, 0);
  std::vector<HiveKeyImage> keys;
  keys.push_back({"", random_time(rng), {}});

  if (!spec.userassist.empty()) {
    HiveKeyImage k{std::string(kUserAssistCount), random_time(rng), {}};
    for (const auto& ua : spec.userassist)
      k.values.push_back({registry::rot13(ua.program), registry::kRegBinary,
                          binary_userassist(ua.run_count, ua.last_run)});
    keys.push_back(std::move(k));
  }
  for (const auto& name : spec.uninstall_names) {
    HiveKeyImage k{std::string(kUninstall) + "\\" + name, random_time(rng), {}};
    k.values.push_back({"DisplayName", registry::kRegSz, encode_utf16le(name, true)});
    k.values.push_back({"Publisher", registry::kRegSz, encode_utf16le("The Tor Project", true)});
    keys.push_back(std::move(k));
  }
  if (spec.corroborate > 0) {
    HiveKeyImage k{std::string(kTypedUrls), random_time(rng), {}};
    for (std::size_t i = 0; i < std::min(spec.corroborate, spec.history); ++i)
      k.values.push_back({"url" + std::to_string(i + 1), registry::kRegSz,
                          encode_utf16le(history_url(spec.seed, i), true)});
    keys.push_back(std::move(k));
  }
  for (const auto& hv : spec.hive_values) {
    HiveKeyImage k{hv.key_path, random_time(rng), {}};
    k.values.push_back({hv.name, registry::kRegSz, encode_utf16le(hv.text, true)});
    keys.push_back(std::move(k));
  }
  return keys;
}

GroundTruth generate_hive(const CorpusSpec& spec, const std::filesystem::path& file) {
  auto keys = hive_keys_for(spec);
  GroundTruth truth;
  for (const auto& ua : spec.userassist) {
    TruthEntry e;
    e.store = file.filename().string();
    e.locator = std::string(kUserAssistCount) + ":" + registry::rot13(ua.program);
    e.category = Category::SecurityLogins;
    e.kind = ArtifactKind::UsageSession;
    e.value = ua.program;
    e.timestamps.push_back({"last-run", ua.last_run, within_sanity_window(ua.last_run)});
    e.expect = Expectation::Config;
    truth.entries.push_back(std::move(e));
  }
  for (const auto& name : spec.uninstall_names) {
    TruthEntry e;
    e.store = file.filename().string();
    e.locator = std::string(kUninstall) + "\\" + name + ":DisplayName";
    e.category = Category::SecurityLogins;
    e.kind = ArtifactKind::UsageSession;
    e.value = name;
    e.expect = Expectation::Config;
    truth.entries.push_back(std::move(e));
  }
  for (std::size_t i = 0; i < std::min(spec.corroborate, spec.history); ++i) {
    TruthEntry e;
    e.store = file.filename().string();
    e.locator = std::string(kTypedUrls) + ":url" + std::to_string(i + 1);
    e.category = Category::BrowsingHistory;
    e.kind = ArtifactKind::Urls;
    e.value = history_url(spec.seed, i);
    e.expect = Expectation::Config;
    truth.entries.push_back(std::move(e));
  }
  for (const auto& hv : spec.hive_values) {
    TruthEntry e;
    e.store = file.filename().string();
    e.locator = hv.key_path + ":" + hv.name;
    const bool url = hv.text.find("://") != std::string::npos;
    e.category = url ? Category::BrowsingHistory : Category::SecurityLogins;
    e.kind = url ? ArtifactKind::Urls : ArtifactKind::UsageSession;
    e.value = hv.text;
    e.expect = Expectation::Config;
    truth.entries.push_back(std::move(e));
  }
  write_file(file, build_hive(std::move(keys)));
  return truth;
}

}  // namespace d2wfp::corpus
