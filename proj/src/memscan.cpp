#include "d2wfp/memscan.hpp"

#include <algorithm>
#include <fstream>

#include "d2wfp/error.hpp"
#include "d2wfp/text.hpp"

namespace d2wfp::memscan {

namespace {

// Characters a matcher may inspect before its own start (email local part
// plus one boundary character, with slack).
constexpr std::size_t kLookbackChars = 72;

bool printable(std::uint8_t c) noexcept { return c >= 0x20 && c <= 0x7e; }
bool alnum(char c) noexcept {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}
bool alpha(char c) noexcept { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool base32(char c) noexcept {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '2' && c <= '7');
}
bool url_char(char c) noexcept {
  if (c <= 0x20 || c > 0x7e) return false;
  switch (c) {
    case '"': case '\'': case '<': case '>': case '\\': case '^': case '`':
    case '{': case '|': case '}':
      return false;
    default:
      return true;
  }
}
bool host_char(char c) noexcept { return alnum(c) || c == '.' || c == '-' || c == '_'; }
bool local_char(char c) noexcept {
  return alnum(c) || c == '.' || c == '_' || c == '%' || c == '+' || c == '-';
}
bool domain_char(char c) noexcept { return alnum(c) || c == '.' || c == '-'; }

char lower(char c) noexcept { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : c; }

bool iequals_at(std::string_view t, std::size_t pos, std::string_view word) noexcept {
  if (pos + word.size() > t.size()) return false;
  for (std::size_t i = 0; i < word.size(); ++i)
    if (lower(t[pos + i]) != word[i]) return false;
  return true;
}

struct Match {
  std::size_t begin;  // char index in the run
  std::size_t end;
  const char* pattern;
};

void match_urls(std::string_view t, std::vector<Match>& out) {
  for (std::size_t k = t.find("://"); k != std::string_view::npos; k = t.find("://", k + 1)) {
    std::size_t start;
    if (k >= 5 && iequals_at(t, k - 5, "https")) {
      start = k - 5;
    } else if (k >= 4 && iequals_at(t, k - 4, "http")) {
      start = k - 4;
    } else {
      continue;
    }
    std::size_t i = k + 3;
    std::size_t host_begin = i;
    bool host_alnum = false;
    while (i < t.size() && host_char(t[i]) && i - start < kMaxUrlChars) {
      host_alnum |= alnum(t[i]);
      ++i;
    }
    if (i == host_begin || !host_alnum) continue;
    while (i < t.size() && url_char(t[i]) && i - start < kMaxUrlChars) ++i;
    while (i > host_begin + 1 && (t[i - 1] == '.' || t[i - 1] == ',' || t[i - 1] == ';' ||
                                  t[i - 1] == ')' || t[i - 1] == '!' || t[i - 1] == '?'))
      --i;
    out.push_back({start, i, "url"});
  }
}

void match_onions(std::string_view t, std::vector<Match>& out) {
  for (std::size_t k = 0; k + 6 <= t.size(); ++k) {
    if (t[k] != '.' || !iequals_at(t, k, ".onion")) continue;
    const std::size_t end = k + 6;
    if (end < t.size() && alnum(t[end])) continue;
    std::size_t j = k;
    while (j > 0 && k - j <= 56 && base32(t[j - 1])) --j;
    if (j > 0 && alnum(t[j - 1])) continue;
    const std::size_t n = k - j;
    if (n == 16) {
      out.push_back({j, end, "onion_v2"});
    } else if (n == 56) {
      out.push_back({j, end, "onion_v3"});
    }
  }
}

void match_emails(std::string_view t, std::vector<Match>& out) {
  for (std::size_t k = t.find('@'); k != std::string_view::npos; k = t.find('@', k + 1)) {
    std::size_t j = k;
    while (j > 0 && k - j <= kMaxEmailLocal && local_char(t[j - 1])) --j;
    if (k - j > kMaxEmailLocal) continue;
    while (j < k && t[j] == '.') ++j;
    if (j == k || t[k - 1] == '.') continue;
    std::size_t e = k + 1;
    while (e < t.size() && e - k - 1 < kMaxEmailDomain && domain_char(t[e])) ++e;
    while (e > k + 1 && (t[e - 1] == '.' || t[e - 1] == '-')) --e;
    std::string_view domain = t.substr(k + 1, e - k - 1);
    if (domain.empty() || !alnum(domain.front())) continue;
    const auto dot = domain.rfind('.');
    if (dot == std::string_view::npos || domain.size() - dot - 1 < 2) continue;
    if (!std::all_of(domain.begin() + dot + 1, domain.end(), alpha)) continue;
    out.push_back({j, e, "email"});
  }
}

void match_queries(std::string_view t, std::vector<Match>& out) {
  for (std::size_t k = t.find("q="); k != std::string_view::npos; k = t.find("q=", k + 1)) {
    std::size_t start = k;
    if (k >= 4 && t.substr(k - 4, 4) == "uery") start = k - 4;
    if (start > 0 && alnum(t[start - 1])) continue;
    std::size_t e = k + 2;
    while (e < t.size() && e - k - 2 < kMaxQueryChars) {
      const char c = t[e];
      if (c == '&' || c == '#' || c == ' ' || c == '"' || c == '\'' || c == '<' || c == '>') break;
      ++e;
    }
    if (e == k + 2) continue;
    out.push_back({start, e, "search_query"});
  }
}

void match_keywords(std::string_view t, const std::vector<std::string>& keywords,
                    std::vector<Match>& out) {
  if (keywords.empty()) return;
  std::string low(t.size(), '\0');
  std::transform(t.begin(), t.end(), low.begin(), lower);
  for (const auto& kw : keywords) {
    if (kw.empty()) continue;
    for (auto k = low.find(kw); k != std::string::npos; k = low.find(kw, k + 1))
      out.push_back({k, k + kw.size(), "keyword"});
  }
}

std::size_t lookback_bytes() { return 2 * kLookbackChars + 2; }

// Scans buf (covering dump bytes [base, base + buf.size())) and keeps hits
// whose first byte lies in [lo, hi). Matching is local to each anchor, so a
// caller that supplies enough margin gets the same hits as a full scan.
void scan_region(ByteView buf, std::uint64_t base, std::uint64_t lo, std::uint64_t hi,
                 const PatternSet& patterns, std::size_t radius, std::vector<ScanHit>& out) {
  std::vector<Match> matches;
  std::string text;

  auto emit_run = [&](std::size_t run_start, std::size_t step, HitEncoding enc) {
    matches.clear();
    if (patterns.url) match_urls(text, matches);
    if (patterns.onion) match_onions(text, matches);
    if (patterns.email) match_emails(text, matches);
    if (patterns.search_query) match_queries(text, matches);
    match_keywords(text, patterns.keywords, matches);
    for (const auto& m : matches) {
      const std::uint64_t off = base + run_start + m.begin * step;
      if (off < lo || off >= hi) continue;
      ScanHit h;
      h.pattern = m.pattern;
      h.text = text.substr(m.begin, m.end - m.begin);
      h.offset = off;
      h.length = (m.end - m.begin) * step;
      h.encoding = enc;
      h.context = context_window(buf, run_start + m.begin * step, radius, h.length);
      out.push_back(std::move(h));
    }
  };

  const std::size_t n = buf.size();
  for (std::size_t i = 0; i < n;) {
    if (!printable(buf[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && printable(buf[j])) ++j;
    if (j - i >= 3) {
      text.assign(reinterpret_cast<const char*>(buf.data() + i), j - i);
      emit_run(i, 1, HitEncoding::Ascii);
    }
    i = j;
  }

  for (std::size_t align = 0; align < 2; ++align) {
    for (std::size_t i = align; i + 1 < n;) {
      if (!(printable(buf[i]) && buf[i + 1] == 0)) {
        i += 2;
        continue;
      }
      std::size_t j = i;
      text.clear();
      while (j + 1 < n && printable(buf[j]) && buf[j + 1] == 0) {
        text.push_back(static_cast<char>(buf[j]));
        j += 2;
      }
      if (text.size() >= 3) emit_run(i, 2, HitEncoding::Utf16le);
      i = j;
    }
  }
}

void finish(std::vector<ScanHit>& hits) {
  std::sort(hits.begin(), hits.end(), [](const ScanHit& a, const ScanHit& b) {
    if (a.offset != b.offset) return a.offset < b.offset;
    if (a.pattern != b.pattern) return a.pattern < b.pattern;
    return a.encoding < b.encoding;
  });
  hits.erase(std::unique(hits.begin(), hits.end(),
                         [](const ScanHit& a, const ScanHit& b) {
                           return a.offset == b.offset && a.pattern == b.pattern;
                         }),
             hits.end());
}

struct Margins {
  std::size_t left;
  std::size_t right;
};

Margins margins_for(const PatternSet& patterns, const ScanOptions& options) {
  return {lookback_bytes() + options.radius, patterns.max_match_bytes() + options.radius};
}

}  // namespace

std::string_view to_string(HitEncoding e) noexcept {
  return e == HitEncoding::Ascii ? "ascii" : "utf16le";
}

std::size_t PatternSet::max_match_bytes() const {
  std::size_t chars = std::max({kMaxUrlChars, kMaxEmailLocal + 1 + kMaxEmailDomain,
                                std::size_t{56 + 6}, kMaxQueryChars + 6});
  for (const auto& k : keywords) chars = std::max(chars, k.size());
  return 2 * chars;
}

std::string context_window(ByteView dump, std::uint64_t offset, std::size_t radius,
                           std::size_t length) {
  if (offset > dump.size()) return {};
  const std::uint64_t begin = offset > radius ? offset - radius : 0;
  const std::uint64_t end = std::min<std::uint64_t>(dump.size(), offset + length + radius);
  std::string out;
  out.reserve(end - begin);
  for (std::uint64_t i = begin; i < end; ++i)
    out.push_back(printable(dump[i]) ? static_cast<char>(dump[i]) : '.');
  return out;
}

std::vector<ScanHit> scan(ByteView dump, const PatternSet& patterns, const ScanOptions& options) {
  std::vector<ScanHit> hits;
  scan_region(dump, 0, 0, dump.size(), patterns, options.radius, hits);
  finish(hits);
  return hits;
}

std::vector<ScanHit> scan_chunked(ByteView dump, const PatternSet& patterns,
                                  const ScanOptions& options) {
  const std::size_t chunk = std::max<std::size_t>(options.chunk_size, 1);
  const Margins m = margins_for(patterns, options);
  std::vector<ScanHit> hits;
  for (std::size_t lo = 0; lo < dump.size(); lo += chunk) {
    const std::size_t hi = std::min(dump.size(), lo + chunk);
    const std::size_t b = lo > m.left ? lo - m.left : 0;
    const std::size_t e = std::min(dump.size(), hi + m.right);
    scan_region(dump.subspan(b, e - b), b, lo, hi, patterns, options.radius, hits);
  }
  finish(hits);
  return hits;
}

std::vector<ScanHit> scan_file(const std::filesystem::path& path, const PatternSet& patterns,
                               const ScanOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::error_code ec;
  const std::uint64_t size = std::filesystem::file_size(path, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot stat " + path.string());

  const std::size_t chunk = std::max<std::size_t>(options.chunk_size, 1);
  const Margins m = margins_for(patterns, options);
  std::vector<ScanHit> hits;
  Bytes buf;
  for (std::uint64_t lo = 0; lo < size; lo += chunk) {
    const std::uint64_t hi = std::min<std::uint64_t>(size, lo + chunk);
    const std::uint64_t b = lo > m.left ? lo - m.left : 0;
    const std::uint64_t e = std::min<std::uint64_t>(size, hi + m.right);
    buf.resize(e - b);
    in.seekg(static_cast<std::streamoff>(b));
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size()))
      throw Error(ErrorCode::IoError, "short read from " + path.string());
    scan_region(buf, b, lo, hi, patterns, options.radius, hits);
  }
  finish(hits);
  return hits;
}

std::vector<Artifact> classify_hits(const std::vector<ScanHit>& hits, std::string_view evidence_id,
                                    std::string_view store, Location location,
                                    RecoveryState state) {
  std::vector<Artifact> out;
  for (const auto& h : hits) {
    if (h.pattern == "onion_v2" || h.pattern == "onion_v3") {
      const bool inside_url = std::any_of(hits.begin(), hits.end(), [&](const ScanHit& u) {
        return u.pattern == "url" && u.encoding == h.encoding && u.offset <= h.offset &&
               h.offset + h.length <= u.offset + u.length;
      });
      if (inside_url) continue;
    }

    ArtifactKind kind;
    Category category;
    std::string value = h.text;
    if (h.pattern == "url" || h.pattern == "onion_v2" || h.pattern == "onion_v3") {
      kind = ArtifactKind::Urls;
      category = Category::BrowsingHistory;
    } else if (h.pattern == "email") {
      kind = ArtifactKind::EmailAddresses;
      category = Category::CacheTemp;
    } else if (h.pattern == "search_query") {
      kind = ArtifactKind::SearchQueries;
      category = Category::SqliteDbForm;
      value = percent_decode(h.text.substr(h.text.find('=') + 1));
    } else {
      kind = ArtifactKind::WebsiteContent;
      category = Category::CacheTemp;
      value = h.context;
    }
    if (!location_matrix_allows(kind, location)) continue;

    std::string locator(store);
    locator += "@" + std::to_string(h.offset) + ":" + std::string(to_string(h.encoding)) + ":" + h.pattern;
    Artifact a = make_artifact(kind, category, location, state, std::move(value), evidence_id,
                               std::move(locator));
    a.set_attribute("pattern", h.pattern);
    a.set_attribute("encoding", std::string(to_string(h.encoding)));
    a.set_attribute("offset", std::to_string(h.offset));
    if (h.pattern != "keyword") a.set_attribute("context", h.context);
    if (h.pattern == "keyword") a.set_attribute("keyword", h.text);
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace d2wfp::memscan
