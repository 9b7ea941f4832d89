#include "d2wfp/case_model.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <sstream>

#include "d2wfp/digest.hpp"
#include "d2wfp/error.hpp"
#include "d2wfp/text.hpp"

namespace d2wfp {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kEvidenceKinds[] = {"directory-tree", "sqlite-store", "registry-hive",
                                               "memory-dump",    "cache-store",  "opaque-file"};
constexpr std::string_view kActions[] = {"acquired", "verified", "analyzed", "exported"};

template <typename T>
T parse_int(std::string_view s, const char* what) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw Error(ErrorCode::ParseError, std::string("bad ") + what + ": " + std::string(s));
  return v;
}

UtcTime parse_time(std::string_view s) {
  auto t = parse_iso8601(s);
  if (!t) throw Error(ErrorCode::ParseError, "bad timestamp: " + std::string(s));
  return *t;
}

std::size_t evidence_ordinal(std::string_view id) {
  std::size_t n = 0;
  if (id.size() > 1) std::from_chars(id.data() + 1, id.data() + id.size(), n);
  return n;
}

void validate_case_id(const std::string& case_id) {
  if (case_id.empty()) throw Error(ErrorCode::EmptyId, "case id must not be empty");
  if (case_id == "." || case_id == ".." ||
      case_id.find_first_of("/\\\t\n\r") != std::string::npos ||
      case_id.find('\0') != std::string::npos)
    throw Error(ErrorCode::Invalid, "case id contains path or control characters");
}

}  // namespace

std::string_view to_string(EvidenceKind kind) noexcept {
  return kEvidenceKinds[static_cast<int>(kind)];
}

std::optional<EvidenceKind> parse_evidence_kind(std::string_view text) noexcept {
  for (int i = 0; i < 6; ++i)
    if (kEvidenceKinds[i] == text) return static_cast<EvidenceKind>(i);
  // short aliases accepted on the command line
  if (text == "hive") return EvidenceKind::RegistryHive;
  if (text == "sqlite") return EvidenceKind::SqliteStore;
  if (text == "memory") return EvidenceKind::MemoryDump;
  if (text == "directory" || text == "profile") return EvidenceKind::DirectoryTree;
  if (text == "cache") return EvidenceKind::CacheStore;
  if (text == "opaque") return EvidenceKind::OpaqueFile;
  return std::nullopt;
}

std::string_view to_string(CustodyAction action) noexcept { return kActions[static_cast<int>(action)]; }

std::optional<CustodyAction> parse_custody_action(std::string_view text) noexcept {
  for (int i = 0; i < 4; ++i)
    if (kActions[i] == text) return static_cast<CustodyAction>(i);
  return std::nullopt;
}

UtcTime system_now() {
  using namespace std::chrono;
  return UtcTime{duration_cast<microseconds>(system_clock::now().time_since_epoch()).count()};
}

Case::Case(std::string case_id, std::string examiner, UtcTime created_at)
    : case_id_(std::move(case_id)), examiner_(std::move(examiner)), created_at_(created_at) {
  validate_case_id(case_id_);
}

const EvidenceItem& Case::register_evidence(const fs::path& path, EvidenceKind kind,
                                            int volatility_level, const Clock& clock) {
  if (volatility_level < 1 || volatility_level > 10)
    throw Error(ErrorCode::InvalidVolatility,
                "volatility level " + std::to_string(volatility_level) + " outside 1..10");
  std::error_code ec;
  if (!fs::exists(path, ec)) throw Error(ErrorCode::IoError, "cannot read " + path.string());

  EvidenceItem item;
  char id[16];
  std::snprintf(id, sizeof id, "E%04zu", evidence_.size() + 1);
  item.evidence_id = id;
  item.kind = kind;
  item.path = fs::absolute(path).lexically_normal();
  item.sha256 = sha256_path(path);
  item.size_bytes = path_size(path);
  item.acquired_at = clock();
  item.volatility_level = volatility_level;
  evidence_.push_back(item);
  append(item.evidence_id, CustodyAction::Acquired, item.sha256, [&] { return item.acquired_at; });
  return evidence_.back();
}

bool Case::verify_integrity(std::string_view evidence_id, const Clock& clock) {
  const auto& item = find_evidence(evidence_id);
  std::string digest;
  try {
    digest = sha256_path(item.path);
  } catch (const Error&) {
    digest = "unreadable";
  }
  const bool ok = digest == item.sha256;
  append(item.evidence_id, CustodyAction::Verified, digest, clock);
  return ok;
}

void Case::record_action(std::string_view evidence_id, CustodyAction action, const Clock& clock) {
  const auto& item = find_evidence(evidence_id);
  append(item.evidence_id, action, item.sha256, clock);
}

const EvidenceItem& Case::find_evidence(std::string_view evidence_id) const {
  for (const auto& e : evidence_)
    if (e.evidence_id == evidence_id) return e;
  throw Error(ErrorCode::NotFound, "unknown evidence id " + std::string(evidence_id));
}

void Case::append(std::string_view evidence_id, CustodyAction action, std::string digest,
                  const Clock& clock) {
  UtcTime at = clock();
  // per-item timestamps never go backwards, even if the wall clock does
  for (auto it = custody_.rbegin(); it != custody_.rend(); ++it) {
    if (it->evidence_id == evidence_id) {
      at = std::max(at, it->at);
      break;
    }
  }
  CustodyRecord rec;
  rec.seq = custody_.size() + 1;
  rec.evidence_id = std::string(evidence_id);
  rec.action = action;
  rec.actor = examiner_;
  rec.at = at;
  rec.digest_at_action = std::move(digest);
  custody_.push_back(std::move(rec));
}

std::string Case::serialize() const {
  std::vector<std::string> lines;
  lines.push_back("case\t" + format_iso8601_micros(created_at_) + "\t" + escape_field(case_id_) +
                  "\t" + escape_field(examiner_));
  char seq[24];
  for (const auto& r : custody_) {
    std::snprintf(seq, sizeof seq, "%010llu", static_cast<unsigned long long>(r.seq));
    lines.push_back("custody\t" + format_iso8601_micros(r.at) + "\t" + r.evidence_id + "\t" + seq +
                    "\t" + std::string(to_string(r.action)) + "\t" + escape_field(r.actor) + "\t" +
                    r.digest_at_action);
  }
  for (const auto& e : evidence_) {
    lines.push_back("evidence\t" + format_iso8601_micros(e.acquired_at) + "\t" + e.evidence_id +
                    "\t" + std::string(to_string(e.kind)) + "\t" +
                    std::to_string(e.volatility_level) + "\t" + std::to_string(e.size_bytes) +
                    "\t" + e.sha256 + "\t" + escape_field(e.path.generic_string()));
  }
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out.push_back('\n');
  }
  return out;
}

Case Case::parse(std::string_view manifest) {
  std::optional<Case> result;
  std::vector<EvidenceItem> evidence;
  std::vector<CustodyRecord> custody;
  for (auto line : split(manifest, '\n')) {
    if (line.empty()) continue;
    const auto f = split(line, '\t');
    if (f[0] == "case" && f.size() == 4) {
      result.emplace(unescape_field(f[2]), unescape_field(f[3]), parse_time(f[1]));
    } else if (f[0] == "custody" && f.size() == 7) {
      CustodyRecord r;
      r.at = parse_time(f[1]);
      r.evidence_id = std::string(f[2]);
      r.seq = parse_int<std::uint64_t>(f[3], "sequence");
      auto action = parse_custody_action(f[4]);
      if (!action) throw Error(ErrorCode::ParseError, "bad custody action");
      r.action = *action;
      r.actor = unescape_field(f[5]);
      r.digest_at_action = std::string(f[6]);
      custody.push_back(std::move(r));
    } else if (f[0] == "evidence" && f.size() == 8) {
      EvidenceItem e;
      e.acquired_at = parse_time(f[1]);
      e.evidence_id = std::string(f[2]);
      auto kind = parse_evidence_kind(f[3]);
      if (!kind) throw Error(ErrorCode::ParseError, "bad evidence kind");
      e.kind = *kind;
      e.volatility_level = parse_int<int>(f[4], "volatility level");
      e.size_bytes = parse_int<std::uint64_t>(f[5], "size");
      e.sha256 = std::string(f[6]);
      e.path = fs::path(unescape_field(f[7]));
      evidence.push_back(std::move(e));
    } else {
      throw Error(ErrorCode::ParseError, "unrecognised manifest line: " + std::string(line));
    }
  }
  if (!result) throw Error(ErrorCode::ParseError, "manifest has no case record");
  std::sort(evidence.begin(), evidence.end(), [](const auto& a, const auto& b) {
    return evidence_ordinal(a.evidence_id) < evidence_ordinal(b.evidence_id);
  });
  std::sort(custody.begin(), custody.end(),
            [](const auto& a, const auto& b) { return a.seq < b.seq; });
  for (const auto& r : custody) {
    const bool known = std::any_of(evidence.begin(), evidence.end(),
                                   [&](const auto& e) { return e.evidence_id == r.evidence_id; });
    if (!known) throw Error(ErrorCode::ParseError, "custody record for unknown evidence " + r.evidence_id);
  }
  result->evidence_ = std::move(evidence);
  result->custody_ = std::move(custody);
  return std::move(*result);
}

Workspace::Workspace(fs::path root, Clock clock) : root_(std::move(root)), clock_(std::move(clock)) {}

fs::path Workspace::case_dir(const std::string& case_id) const { return root_ / "cases" / case_id; }

fs::path Workspace::manifest_path(const std::string& case_id) const {
  return case_dir(case_id) / "case.manifest";
}

bool Workspace::has_case(const std::string& case_id) const {
  std::error_code ec;
  return fs::exists(manifest_path(case_id), ec);
}

Case Workspace::open_case(const std::string& case_id, const std::string& examiner) {
  validate_case_id(case_id);
  if (has_case(case_id)) throw Error(ErrorCode::DuplicateCase, "case " + case_id + " already exists");
  Case c(case_id, examiner, clock_());
  save(c);
  return c;
}

Case Workspace::load(const std::string& case_id) const {
  validate_case_id(case_id);
  const auto path = manifest_path(case_id);
  std::error_code ec;
  if (!fs::exists(path, ec)) throw Error(ErrorCode::NotFound, "no case " + case_id);
  const auto bytes = read_file(path);
  return Case::parse(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

void Workspace::save(const Case& c) const {
  std::error_code ec;
  fs::create_directories(case_dir(c.case_id()), ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + case_dir(c.case_id()).string());
  // write-then-rename so a crash never leaves a half-written manifest
  const auto final_path = manifest_path(c.case_id());
  auto tmp = final_path;
  tmp += ".tmp";
  write_text_file(tmp, c.serialize());
  fs::rename(tmp, final_path, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot replace " + final_path.string());
}

std::vector<std::string> Workspace::case_ids() const {
  std::vector<std::string> ids;
  std::error_code ec;
  for (auto it = fs::directory_iterator(root_ / "cases", ec); !ec && it != fs::end(it);
       it.increment(ec)) {
    if (fs::exists(it->path() / "case.manifest")) ids.push_back(it->path().filename().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace d2wfp
