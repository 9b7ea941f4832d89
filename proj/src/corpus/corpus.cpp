#include <algorithm>
#include <charconv>
#include <filesystem>

#include "d2wfp/error.hpp"
#include "d2wfp/text.hpp"
#include "internal.hpp"

namespace fs = std::filesystem;

namespace d2wfp::corpus {

using namespace detail;

namespace {

constexpr std::string_view kArms[] = {"none", "delete-rows", "vacuum"};
constexpr std::string_view kExpectations[] = {"live",   "carvable", "unrecoverable",
                                              "overwrite-risk", "memory", "config"};

template <typename T>
T parse_number(const KeyValue& kv) {
  T out{};
  const auto* b = kv.value.data();
  const auto* e = b + kv.value.size();
  auto [p, ec] = std::from_chars(b, e, out);
  if (ec != std::errc() || p != e)
    throw Error(ErrorCode::Config, "line " + std::to_string(kv.line) + ": bad number for " + kv.key);
  return out;
}

bool parse_bool(const KeyValue& kv) {
  if (kv.value == "true" || kv.value == "1" || kv.value == "yes") return true;
  if (kv.value == "false" || kv.value == "0" || kv.value == "no") return false;
  throw Error(ErrorCode::Config, "line " + std::to_string(kv.line) + ": bad boolean for " + kv.key);
}

std::vector<std::string_view> fields(const KeyValue& kv, std::size_t n) {
  auto parts = split(kv.value, '|');
  if (parts.size() != n)
    throw Error(ErrorCode::Config, "line " + std::to_string(kv.line) + ": " + kv.key + " expects " +
                                       std::to_string(n) + " '|'-separated fields");
  for (auto& p : parts) p = trim(p);
  return parts;
}

void plant_text(Bytes& image, const MemoryPlant& p) {
  const Bytes enc = p.encoding == Encoding::Utf16le ? encode_utf16le(p.text) : Bytes(p.text.begin(), p.text.end());
  if (p.offset > image.size() || enc.size() > image.size() - p.offset)
    throw Error(ErrorCode::Invalid, "memory plant at " + std::to_string(p.offset) + " does not fit the image");
  std::copy(enc.begin(), enc.end(), image.begin() + static_cast<std::ptrdiff_t>(p.offset));
}

std::uint64_t plant_bytes(const MemoryPlant& p) {
  return p.encoding == Encoding::Utf16le ? 2 * p.text.size() : p.text.size();
}

TruthEntry memory_truth(const MemoryPlant& p, std::string store) {
  TruthEntry e;
  e.store = std::move(store);
  e.locator = "@" + std::to_string(p.offset) + ":" + (p.encoding == Encoding::Ascii ? "ascii" : "utf16le");
  e.value = p.text;
  e.expect = Expectation::Memory;
  if (p.text.find("://") != std::string::npos || p.text.find(".onion") != std::string::npos) {
    e.category = Category::BrowsingHistory;
    e.kind = ArtifactKind::Urls;
  } else if (p.text.find("q=") != std::string::npos) {
    e.category = Category::SqliteDbForm;
    e.kind = ArtifactKind::SearchQueries;
  } else if (p.text.find('@') != std::string::npos) {
    e.category = Category::CacheTemp;
    e.kind = ArtifactKind::EmailAddresses;
  } else {
    e.category = Category::CacheTemp;
    e.kind = ArtifactKind::WebsiteContent;
  }
  return e;
}

}  // namespace

std::string_view to_string(AntiForensics arm) noexcept { return kArms[static_cast<int>(arm)]; }

std::optional<AntiForensics> parse_anti_forensics(std::string_view s) noexcept {
  for (int i = 0; i < 3; ++i)
    if (kArms[i] == s) return static_cast<AntiForensics>(i);
  return std::nullopt;
}

std::string_view to_string(Expectation e) noexcept { return kExpectations[static_cast<int>(e)]; }

std::optional<Expectation> parse_expectation(std::string_view s) noexcept {
  for (int i = 0; i < 6; ++i)
    if (kExpectations[i] == s) return static_cast<Expectation>(i);
  return std::nullopt;
}

CorpusSpec parse_corpus_spec(std::string_view text) {
  CorpusSpec spec;
  for (const auto& kv : parse_key_values(text)) {
    const auto& k = kv.key;
    if (k == "seed") {
      spec.seed = parse_number<std::uint64_t>(kv);
    } else if (k == "history") {
      spec.history = parse_number<std::size_t>(kv);
    } else if (k == "bookmarks") {
      spec.bookmarks = parse_number<std::size_t>(kv);
    } else if (k == "cookies") {
      spec.cookies = parse_number<std::size_t>(kv);
    } else if (k == "forms") {
      spec.forms = parse_number<std::size_t>(kv);
    } else if (k == "downloads") {
      spec.downloads = parse_number<std::size_t>(kv);
    } else if (k == "logins") {
      spec.logins = parse_number<std::size_t>(kv);
    } else if (k == "cache") {
      spec.cache = parse_number<std::size_t>(kv);
    } else if (k == "anti_forensics") {
      auto arm = parse_anti_forensics(kv.value);
      if (!arm) throw Error(ErrorCode::Config, "line " + std::to_string(kv.line) + ": unknown arm " + kv.value);
      spec.anti_forensics = *arm;
    } else if (k == "delete_fraction") {
      spec.delete_fraction = parse_number<double>(kv);
      if (spec.delete_fraction < 0.0 || spec.delete_fraction > 1.0)
        throw Error(ErrorCode::Config, "delete_fraction must be within [0, 1]");
    } else if (k == "reinsert") {
      spec.reinsert = parse_number<std::size_t>(kv);
    } else if (k == "tor_layout") {
      spec.tor_layout = parse_bool(kv);
    } else if (k == "memory_size") {
      spec.memory_size = parse_number<std::uint64_t>(kv);
    } else if (k == "memory_urls") {
      spec.memory_urls = parse_number<std::size_t>(kv);
    } else if (k == "memory_plant") {
      // offset | ascii|utf16le | text
      auto f = fields(kv, 3);
      MemoryPlant p;
      p.offset = parse_number<std::uint64_t>({kv.key, std::string(f[0]), kv.line});
      if (f[1] == "utf16le") {
        p.encoding = Encoding::Utf16le;
      } else if (f[1] != "ascii") {
        throw Error(ErrorCode::Config, "line " + std::to_string(kv.line) + ": encoding must be ascii or utf16le");
      }
      p.text = std::string(f[2]);
      spec.memory_plants.push_back(std::move(p));
    } else if (k == "hive") {
      spec.hive = parse_bool(kv);
    } else if (k == "userassist") {
      // program | run count | last run (ISO 8601)
      auto f = fields(kv, 3);
      UserAssistPlant ua;
      ua.program = std::string(f[0]);
      ua.run_count = parse_number<std::uint32_t>({kv.key, std::string(f[1]), kv.line});
      auto t = parse_iso8601(f[2]);
      if (!t) throw Error(ErrorCode::Config, "line " + std::to_string(kv.line) + ": bad timestamp");
      ua.last_run = *t;
      spec.userassist.push_back(std::move(ua));
      spec.hive = true;
    } else if (k == "uninstall") {
      spec.uninstall_names.push_back(kv.value);
      spec.hive = true;
    } else if (k == "hive_value") {
      auto f = fields(kv, 3);
      spec.hive_values.push_back({std::string(f[0]), std::string(f[1]), std::string(f[2])});
      spec.hive = true;
    } else if (k == "corroborate") {
      spec.corroborate = parse_number<std::size_t>(kv);
    } else {
      throw Error(ErrorCode::Config, "line " + std::to_string(kv.line) + ": unknown key " + k);
    }
  }
  return spec;
}

std::size_t GroundTruth::count(Expectation e) const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [&](const TruthEntry& t) { return t.expect == e; }));
}

std::size_t GroundTruth::count(Category c, Expectation e) const {
  return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [&](const TruthEntry& t) {
    return t.expect == e && t.category == c;
  }));
}

void GroundTruth::append(const GroundTruth& other) {
  entries.insert(entries.end(), other.entries.begin(), other.entries.end());
}

std::string GroundTruth::serialize() const {
  std::string out = "# store\tlocator\tcategory\tkind\texpect\tvalue\ttimestamps\n";
  for (const auto& e : entries) {
    std::string ts;
    for (const auto& t : e.timestamps) {
      if (!ts.empty()) ts.push_back(';');
      ts += t.label + "=" + format_iso8601_micros(t.at);
    }
    out += escape_field(e.store) + "\t" + escape_field(e.locator) + "\t" + std::string(to_string(e.category)) +
           "\t" + std::string(to_string(e.kind)) + "\t" + std::string(to_string(e.expect)) + "\t" +
           escape_field(e.value) + "\t" + escape_field(ts) + "\n";
  }
  return out;
}

GroundTruth GroundTruth::parse(std::string_view text) {
  GroundTruth g;
  int line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    auto f = split(line, '\t');
    auto bad = [&](const char* what) {
      return Error(ErrorCode::ParseError, "ground truth line " + std::to_string(line_no) + ": " + what);
    };
    if (f.size() != 7) throw bad("expected 7 fields");
    TruthEntry e;
    e.store = unescape_field(f[0]);
    e.locator = unescape_field(f[1]);
    auto c = parse_category(f[2]);
    auto k = parse_artifact_kind(f[3]);
    auto x = parse_expectation(f[4]);
    if (!c || !k || !x) throw bad("unknown enum value");
    e.category = *c;
    e.kind = *k;
    e.expect = *x;
    e.value = unescape_field(f[5]);
    const std::string ts = unescape_field(f[6]);
    if (!ts.empty()) {
      for (auto item : split(ts, ';')) {
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) throw bad("bad timestamp item");
        auto t = parse_iso8601(item.substr(eq + 1));
        if (!t) throw bad("bad timestamp");
        e.timestamps.push_back({std::string(item.substr(0, eq)), *t, within_sanity_window(*t)});
      }
    }
    g.entries.push_back(std::move(e));
  }
  return g;
}

GroundTruth generate_memory_dump(const CorpusSpec& spec, const fs::path& file) {
  const std::string store = file.filename().string();
  Bytes image(spec.memory_size, 0);
  std::vector<MemoryPlant> plants = spec.memory_plants;

  std::vector<MemoryPlant> extra;
  for (std::size_t i = 0; i < spec.memory_urls; ++i) {
    Rng rng(spec.seed, kMemory, i);
    extra.push_back({"http://" + random_onion_v3(rng) + "/" + pick_words(rng, 2, '/') + "/" + std::to_string(i),
                     0, i % 2 ? Encoding::Utf16le : Encoding::Ascii});
  }
  for (std::size_t i = 0; i < std::min(spec.corroborate, spec.history); ++i)
    extra.push_back({history_url(spec.seed, i), 0, i % 2 ? Encoding::Utf16le : Encoding::Ascii});

  // seeded placement, keeping a zero gap around every plant so matches stay separate
  constexpr std::uint64_t kGap = 32;
  Rng rng(spec.seed, kMemory, 0xffffffff);
  auto overlaps = [&](std::uint64_t off, std::uint64_t len) {
    return std::any_of(plants.begin(), plants.end(), [&](const MemoryPlant& q) {
      return off < q.offset + plant_bytes(q) + kGap && q.offset < off + len + kGap;
    });
  };
  for (auto& p : extra) {
    const std::uint64_t len = plant_bytes(p);
    if (len + 2 * kGap > spec.memory_size)
      throw Error(ErrorCode::Invalid, "memory image too small for its plants");
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      std::uint64_t off = kGap + rng.below(spec.memory_size - len - 2 * kGap);
      if (p.encoding == Encoding::Utf16le) off &= ~std::uint64_t{1};
      if (!overlaps(off, len)) {
        p.offset = off;
        placed = true;
      }
    }
    if (!placed) throw Error(ErrorCode::Invalid, "memory image too crowded to place plants");
    plants.push_back(p);
  }

  GroundTruth truth;
  for (const auto& p : plants) {
    plant_text(image, p);
    truth.entries.push_back(memory_truth(p, store));
  }
  write_file(file, image);
  return truth;
}

CorpusLayout generate_corpus(const CorpusSpec& spec, const fs::path& out_dir, GroundTruth* truth_out) {
  CorpusLayout layout;
  layout.root = out_dir;
  layout.profile = spec.tor_layout
                       ? out_dir / "Tor Browser" / "Browser" / "TorBrowser" / "Data" / "Browser" / "profile.default"
                       : out_dir / "firefox" / "x7k2m9qa.default-release";
  fs::create_directories(out_dir);

  GroundTruth truth = generate_profile(spec, layout.profile);
  truth = apply_antiforensics(layout.profile, spec.anti_forensics, truth, spec);
  if (spec.memory_size > 0) {
    layout.memory = out_dir / "memory.raw";
    truth.append(generate_memory_dump(spec, layout.memory));
  }
  if (spec.hive) {
    layout.hive = out_dir / "NTUSER.DAT";
    truth.append(generate_hive(spec, layout.hive));
  }
  layout.manifest = out_dir / "ground_truth.tsv";
  write_text_file(layout.manifest, truth.serialize());
  if (truth_out) *truth_out = std::move(truth);
  return layout;
}

}  // namespace d2wfp::corpus
