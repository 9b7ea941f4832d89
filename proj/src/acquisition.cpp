#include "d2wfp/acquisition.hpp"

#include <algorithm>
#include <cstring>

#include "d2wfp/error.hpp"

namespace d2wfp {

namespace fs = std::filesystem;

std::string_view volatility_name(int level) noexcept {
  if (level < 1 || level > 10) return "unknown";
  return kVolatilityTable[static_cast<std::size_t>(level - 1)].name;
}

int default_volatility(EvidenceKind kind) noexcept {
  switch (kind) {
    case EvidenceKind::MemoryDump: return 6;
    case EvidenceKind::CacheStore: return 7;
    default: return 8;
  }
}

EvidenceKind detect_source_kind(ByteView first_bytes) noexcept {
  if (first_bytes.size() < 16) return EvidenceKind::OpaqueFile;
  for (const auto& sig : kSourceSignatures) {
    if (first_bytes.size() >= sig.offset + sig.magic.size() &&
        std::memcmp(first_bytes.data() + sig.offset, sig.magic.data(), sig.magic.size()) == 0)
      return sig.kind;
  }
  return EvidenceKind::OpaqueFile;
}

std::vector<EvidenceItem> schedule_by_volatility(std::vector<EvidenceItem> items) {
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    return a.volatility_level < b.volatility_level;
  });
  return items;
}

namespace {

void walk(const fs::path& dir, IngestResult& out) {
  std::error_code ec;
  std::vector<fs::directory_entry> children;
  for (auto it = fs::directory_iterator(dir, ec); !ec && it != fs::end(it); it.increment(ec))
    children.push_back(*it);
  if (ec) {
    out.errors.push_back(dir.string() + ": " + ec.message());
    return;
  }
  std::sort(children.begin(), children.end(),
            [](const auto& a, const auto& b) { return a.path().filename() < b.path().filename(); });

  bool is_profile = false;
  for (const auto& child : children) {
    if (child.path().filename() == "places.sqlite" && child.is_regular_file(ec)) is_profile = true;
  }
  if (is_profile) out.profile_dirs.push_back(dir);

  for (const auto& child : children) {
    if (child.is_symlink(ec)) continue;
    if (child.is_directory(ec)) {
      walk(child.path(), out);
    } else if (child.is_regular_file(ec)) {
      try {
        const auto head = read_file_prefix(child.path(), 16);
        out.files.push_back({child.path(), detect_source_kind(head)});
      } catch (const Error& e) {
        out.errors.push_back(child.path().string() + ": " + e.what());
      }
    }
  }
}

}  // namespace

IngestResult ingest_directory(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec))
    throw Error(ErrorCode::IoError, "not a readable directory: " + root.string());
  fs::directory_iterator probe(root, ec);
  if (ec) throw Error(ErrorCode::IoError, root.string() + ": " + ec.message());
  IngestResult out;
  walk(root, out);
  return out;
}

}  // namespace d2wfp
