#include "d2wfp/sqlite/carver.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "d2wfp/error.hpp"
#include "d2wfp/time.hpp"

namespace d2wfp::sqlite {

namespace {

constexpr std::uint64_t kMaxCarvedPayload = 1u << 20;
constexpr std::size_t kFreeblockHeader = 4;
constexpr double kDamagedThreshold = 0.75;

bool printable_text(const std::string& s) {
  for (unsigned char c : s) {
    if (c < 0x20 && c != '\t' && c != '\n' && c != '\r') return false;
    if (c == 0x7F) return false;
  }
  return is_valid_utf8(s);
}

bool timestamp_like(std::int64_t v) {
  for (auto kind : {EpochKind::UnixSeconds, EpochKind::UnixMillis, EpochKind::PrtimeMicros,
                    EpochKind::WebkitMicros, EpochKind::FiletimeTicks}) {
    try {
      if (v >= 0 && normalize_timestamp(v, kind).plausible) return true;
    } catch (const Error&) {
    }
  }
  return false;
}

bool serial_fits_affinity(std::uint64_t st, Affinity a) {
  const bool is_null = st == 0;
  const bool is_int = (st >= 1 && st <= 6) || st == 8 || st == 9;
  const bool is_real = st == 7;
  const bool is_text = st >= 13 && st % 2 == 1;
  const bool is_blob = st >= 12 && st % 2 == 0;
  switch (a) {
    case Affinity::Integer: return is_null || is_int || is_real;
    case Affinity::Real: return is_null || is_int || is_real;
    case Affinity::Text: return is_null || is_text || is_blob;
    case Affinity::Numeric:
    case Affinity::Blob: return true;
  }
  return true;
}

bool shape_accepts(const TableShape& shape, const std::vector<std::uint64_t>& sts,
                   const std::vector<bool>& known) {
  if (sts.size() != shape.columns.size()) return false;
  for (std::size_t i = 0; i < sts.size(); ++i) {
    if (!known[i]) continue;
    if (static_cast<int>(i) == shape.rowid_alias) {
      if (sts[i] != 0) return false;
      continue;
    }
    if (!serial_fits_affinity(sts[i], shape.columns[i].affinity)) return false;
  }
  return true;
}

std::string signature(const std::vector<Value>& values) { return render_values(values); }

struct Candidate {
  CarvedRecord record;
  const TableShape* shape = nullptr;
};

class Carver {
 public:
  Carver(const Database& db, const CarveOptions& options)
      : db_(db), opt_(options), enc_(db.header().text_encoding) {
    std::vector<std::uint32_t> roots{1};
    try {
      shapes_ = db.table_shapes();
      for (const auto& e : db.schema())
        if (e.root_page > 1) roots.push_back(e.root_page);
    } catch (const Error&) {
      ++result_.skipped_pages;  // schema unreadable; shape-less carving still works
    }
    for (const auto& shape : shapes_) {
      try {
        for (const auto& rec : walk_btree(db, shape.root_page, shape.name)) live_.insert(signature(rec.columns));
      } catch (const Error&) {
        ++result_.skipped_pages;
      }
    }
    for (auto root : roots) collect_tree_pages(root);
    std::sort(tree_pages_.begin(), tree_pages_.end());
    tree_pages_.erase(std::unique(tree_pages_.begin(), tree_pages_.end()), tree_pages_.end());
    collect_freelist();
  }

  CarveResult take() { return std::move(result_); }

  void carve_freelist() {
    for (const auto& [number, trunk_cells] : freelist_) {
      ByteView pg;
      try {
        pg = db_.page(number);
      } catch (const Error&) {
        ++result_.skipped_pages;
        continue;
      }
      const ByteView usable = pg.first(db_.usable_size());
      if (trunk_cells >= 0) {
        // trunk: header and leaf list overwrite the start of the old page
        carve_region(usable, 8 + 4 * static_cast<std::size_t>(trunk_cells), usable.size(), number,
                     CarveOrigin::FreelistPage);
        continue;
      }
      carve_dead_page(usable, number);
    }
  }

  void carve_unallocated() {
    for (auto number : tree_pages_) {
      ByteView pg;
      try {
        pg = db_.page(number);
      } catch (const Error&) {
        ++result_.skipped_pages;
        continue;
      }
      carve_live_page(pg.first(db_.usable_size()), number);
    }
  }

  void carve_sidecars() {
    for (const auto& side : db_.sidecars()) {
      const ByteView bytes(side.bytes);
      const auto before = result_.records.size();
      scan_intact(bytes, 0, bytes.size(), 0, CarveOrigin::Unallocated);
      for (auto i = before; i < result_.records.size(); ++i) result_.records[i].source = side.label;
    }
  }

 private:
  using Span = std::pair<std::size_t, std::size_t>;

  // Every page reachable from a b-tree root, table or index.
  void collect_tree_pages(std::uint32_t root) {
    std::vector<std::uint32_t> stack{root};
    std::unordered_set<std::uint32_t> seen;
    while (!stack.empty()) {
      const auto number = stack.back();
      stack.pop_back();
      if (number == 0 || number > db_.page_count() || !seen.insert(number).second) continue;
      const auto pg = db_.page(number);
      const auto hdr = parse_page_header(pg, number);
      if (!hdr || hdr->pointer_array_end() > pg.size()) {
        ++result_.skipped_pages;
        continue;
      }
      tree_pages_.push_back(number);
      if (hdr->type != PageType::TableInterior && hdr->type != PageType::IndexInterior) continue;
      const std::size_t base = hdr->header_offset + hdr->header_size;
      for (std::size_t i = 0; i < hdr->cell_count; ++i) {
        const std::size_t cell = load_be16(pg.data() + base + 2 * i);
        if (cell + 4 <= pg.size()) stack.push_back(load_be32(pg.data() + cell));
      }
      stack.push_back(hdr->right_child);
    }
  }

  void collect_freelist() {
    std::uint32_t trunk = db_.header().freelist_head;
    std::unordered_set<std::uint32_t> seen;
    const std::size_t max_leaves = (db_.usable_size() - 8) / 4;
    while (trunk != 0) {
      if (!seen.insert(trunk).second || trunk > db_.page_count()) {
        ++result_.skipped_pages;
        break;
      }
      const auto pg = db_.page(trunk);
      const std::uint32_t next = load_be32(pg.data());
      const std::size_t count = std::min<std::size_t>(load_be32(pg.data() + 4), max_leaves);
      freelist_.push_back({trunk, static_cast<int>(count)});
      for (std::size_t i = 0; i < count; ++i) {
        const auto leaf = load_be32(pg.data() + 8 + 4 * i);
        if (leaf == 0 || leaf > db_.page_count() || !seen.insert(leaf).second) {
          ++result_.skipped_pages;
          continue;
        }
        freelist_.push_back({leaf, -1});
      }
      trunk = next;
    }
    std::sort(freelist_.begin(), freelist_.end());
  }

  // Freed page: the old cells are still where the pointer array says.
  void carve_dead_page(ByteView pg, std::uint32_t number) {
    constexpr auto origin = CarveOrigin::FreelistPage;
    const auto hdr = parse_page_header(pg, number);
    if (!hdr || hdr->type != PageType::TableLeaf || hdr->pointer_array_end() > pg.size()) {
      carve_region(pg, number == 1 ? kHeaderSize : 0, pg.size(), number, origin);
      return;
    }
    std::vector<Span> covered{{0, hdr->pointer_array_end()}};
    const std::size_t base = hdr->header_offset + hdr->header_size;
    for (std::size_t i = 0; i < hdr->cell_count; ++i) {
      const std::size_t cell = load_be16(pg.data() + base + 2 * i);
      if (cell >= pg.size()) continue;
      if (auto end = try_intact(pg, cell, pg.size(), number, origin)) covered.push_back({cell, *end});
    }
    for (const auto& fb : freeblocks(pg, *hdr)) {
      carve_region(pg, fb.first, fb.second, number, origin);
      covered.push_back(fb);
    }
    for (const auto& [b, e] : uncovered(std::move(covered), hdr->pointer_array_end(), pg.size()))
      carve_region(pg, b, e, number, origin);
  }

  // In-use page: only the gap, freeblocks and stale fragments are dead space.
  void carve_live_page(ByteView pg, std::uint32_t number) {
    const auto hdr = parse_page_header(pg, number);
    if (!hdr) return;
    const std::size_t content = std::max<std::size_t>(hdr->content_start, hdr->pointer_array_end());
    carve_region(pg, hdr->pointer_array_end(), std::min(content, pg.size()), number, CarveOrigin::Unallocated);

    std::vector<Span> covered{{0, std::min(content, pg.size())}};
    for (const auto& fb : freeblocks(pg, *hdr)) {
      carve_region(pg, fb.first, fb.second, number, CarveOrigin::Freeblock);
      covered.push_back(fb);
    }
    if (hdr->type != PageType::TableLeaf) return;
    const std::size_t base = hdr->header_offset + hdr->header_size;
    for (std::size_t i = 0; i < hdr->cell_count; ++i) {
      const std::size_t cell = load_be16(pg.data() + base + 2 * i);
      if (cell >= pg.size()) continue;
      if (auto len = live_cell_length(pg, cell)) covered.push_back({cell, cell + *len});
    }
    for (const auto& [b, e] : uncovered(std::move(covered), 0, pg.size()))
      carve_region(pg, b, e, number, CarveOrigin::Unallocated);
  }

  std::vector<Span> freeblocks(ByteView pg, const BtreePageHeader& hdr) {
    std::vector<Span> out;
    std::size_t fb = hdr.first_freeblock;
    std::size_t last = 0;
    while (fb != 0) {
      if (fb <= last || fb + kFreeblockHeader > pg.size()) {
        ++result_.skipped_pages;
        break;
      }
      const std::size_t next = load_be16(pg.data() + fb);
      const std::size_t size = load_be16(pg.data() + fb + 2);
      if (size < kFreeblockHeader || fb + size > pg.size()) {
        ++result_.skipped_pages;
        break;
      }
      out.push_back({fb, fb + size});
      last = fb;
      fb = next;
    }
    return out;
  }

  static std::vector<Span> uncovered(std::vector<Span> covered, std::size_t from, std::size_t to) {
    std::sort(covered.begin(), covered.end());
    std::vector<Span> out;
    std::size_t cursor = from;
    for (const auto& [b, e] : covered) {
      if (b > cursor && cursor < to) out.push_back({cursor, std::min(b, to)});
      cursor = std::max(cursor, e);
    }
    if (cursor < to) out.push_back({cursor, to});
    return out;
  }

  std::optional<std::size_t> live_cell_length(ByteView pg, std::size_t cell) const {
    const auto p = try_read_varint(pg, cell);
    if (!p) return std::nullopt;
    const auto r = try_read_varint(pg, cell + p->width);
    if (!r) return std::nullopt;
    const auto local = db_.local_payload_size(p->value);
    return p->width + r->width + local + (local < p->value ? 4 : 0);
  }

  // Intact cells first; the stretches between them are then tried as cells
  // whose first four bytes were overwritten by a freeblock header.
  void carve_region(ByteView pg, std::size_t from, std::size_t to, std::uint32_t number, CarveOrigin origin) {
    if (from >= to) return;
    std::vector<Span> intact;
    std::size_t o = from;
    while (o + 3 <= to) {
      if (auto end = try_intact(pg, o, to, number, origin)) {
        intact.push_back({o, *end});
        o = *end;
      } else {
        ++o;
      }
    }
    for (const auto& [b, e] : uncovered(std::move(intact), from, to)) {
      std::size_t c = b;
      while (c + kFreeblockHeader + 2 <= e) {
        if (auto end = try_damaged(pg, c, e, number, origin)) {
          c = *end;
        } else {
          ++c;
        }
      }
    }
  }

  void scan_intact(ByteView pg, std::size_t from, std::size_t to, std::uint32_t number, CarveOrigin origin) {
    std::size_t o = from;
    while (o + 3 <= to) {
      if (auto end = try_intact(pg, o, to, number, origin)) {
        o = *end;
      } else {
        ++o;
      }
    }
  }

  // Attempts a full table-leaf cell at `o`; returns the cell end on success.
  std::optional<std::size_t> try_intact(ByteView pg, std::size_t o, std::size_t limit,
                                        std::uint32_t number, CarveOrigin origin) {
    if (pg[o] == 0) return std::nullopt;
    const ByteView window = pg.first(limit);
    const auto p = try_read_varint(window, o);
    if (!p || p->value < 2 || p->value > kMaxCarvedPayload) return std::nullopt;
    const auto r = try_read_varint(window, o + p->width);
    if (!r) return std::nullopt;
    const std::size_t start = o + p->width + r->width;
    const std::size_t local = db_.local_payload_size(p->value);
    const bool overflow = local < p->value;
    const std::size_t cell_end = start + local + (overflow ? 4 : 0);
    if (cell_end > limit) return std::nullopt;

    // record header, checked in place before anything is copied
    const ByteView head = pg.subspan(start, local);
    const auto h = try_read_varint(head, 0);
    if (!h || h->value < 2 || h->value > head.size() || h->value > 1 + 9 * 256) return std::nullopt;
    std::vector<std::uint64_t> sts;
    std::uint64_t body = 0;
    std::size_t pos = h->width;
    const ByteView header_bytes = head.first(static_cast<std::size_t>(h->value));
    while (pos < h->value) {
      const auto st = try_read_varint(header_bytes, pos);
      if (!st) return std::nullopt;
      const auto size = serial_type_size(st->value);
      if (!size) return std::nullopt;
      sts.push_back(st->value);
      body += *size;
      pos += st->width;
    }
    if (sts.empty() || h->value + body != p->value) return std::nullopt;

    const std::vector<bool> known(sts.size(), true);
    const TableShape* shape = match_shape(sts, known);
    if (!shape && shapes_.size() && sts.size() < 2) return std::nullopt;

    Bytes payload(head.begin(), head.end());
    bool truncated = false;
    if (overflow) truncated = !follow_overflow(load_be32(pg.data() + start + local), p->value, payload);

    CarvedRecord rec;
    rec.origin = origin;
    rec.page = number;
    rec.offset = static_cast<std::uint32_t>(o);
    rec.rowid = static_cast<std::int64_t>(r->value);
    decode_columns(payload, static_cast<std::size_t>(h->value), sts, known, rec);
    if (truncated) rec.complete = false;
    if (!accept(rec, shape)) return std::nullopt;
    return cell_end;
  }

  bool follow_overflow(std::uint32_t next, std::uint64_t total, Bytes& payload) const {
    std::size_t hops = 0;
    const std::size_t chunk = db_.usable_size() - 4;
    while (payload.size() < total) {
      if (next == 0 || next > db_.page_count() || ++hops > db_.overflow_cap()) return false;
      const auto ov = db_.page(next);
      const std::size_t take = std::min<std::uint64_t>(chunk, total - payload.size());
      payload.insert(payload.end(), ov.begin() + 4, ov.begin() + 4 + static_cast<std::ptrdiff_t>(take));
      next = load_be32(ov.data());
    }
    return true;
  }

  // Decodes columns whose bytes are present; marks the rest undecoded.
  void decode_columns(ByteView payload, std::size_t body_start, const std::vector<std::uint64_t>& sts,
                      const std::vector<bool>& known, CarvedRecord& rec) const {
    std::size_t pos = body_start;
    bool lost_position = false;
    for (std::size_t i = 0; i < sts.size(); ++i) {
      if (!known[i] || lost_position) {
        rec.columns.emplace_back();
        rec.decoded.push_back(false);
        rec.complete = false;
        lost_position = true;
        continue;
      }
      const auto size = *serial_type_size(sts[i]);
      if (pos + size > payload.size()) {
        rec.columns.emplace_back();
        rec.decoded.push_back(false);
        rec.complete = false;
        lost_position = true;
        continue;
      }
      rec.columns.push_back(decode_value(sts[i], payload.subspan(pos, size), enc_));
      rec.decoded.push_back(true);
      pos += size;
    }
  }

  const TableShape* match_shape(const std::vector<std::uint64_t>& sts, const std::vector<bool>& known) const {
    for (const auto& s : shapes_)
      if (shape_accepts(s, sts, known)) return &s;
    return nullptr;
  }

  // Rebuilds a cell at `o` whose leading four bytes (payload length, rowid and
  // possibly the start of the record header) were overwritten. Returns the
  // cell end when a candidate is accepted.
  std::optional<std::size_t> try_damaged(ByteView pg, std::size_t o, std::size_t end, std::uint32_t number,
                                         CarveOrigin origin) {
    const std::size_t intact_from = o + kFreeblockHeader;
    std::optional<Candidate> best;
    std::size_t best_end = 0;

    for (const auto& shape : shapes_) {
      const std::size_t n = shape.columns.size();
      for (std::size_t lead = 2; lead <= 7; ++lead) {
        const std::size_t h0 = o + lead;  // record-header length byte
        std::vector<std::uint64_t> sts(n, 0);
        std::vector<bool> known(n, true);
        std::size_t pos = h0 + 1;
        bool ok = true;
        std::size_t unknown_col = n;
        int unknown_count = 0;
        for (std::size_t i = 0; i < n && ok; ++i) {
          if (pos < intact_from) {
            if (static_cast<int>(i) != shape.rowid_alias) {
              known[i] = false;
              unknown_col = i;
              ++unknown_count;
            }
            pos += 1;
            continue;
          }
          const auto st = try_read_varint(pg.first(end), pos);
          if (!st || !serial_type_size(st->value)) {
            ok = false;
            break;
          }
          if (static_cast<int>(i) == shape.rowid_alias ? st->value != 0
                                                        : !serial_fits_affinity(st->value, shape.columns[i].affinity)) {
            ok = false;
            break;
          }
          sts[i] = st->value;
          pos += st->width;
        }
        if (!ok || unknown_count > 1) continue;
        // a guessed header needs at least two real serial types behind it
        std::size_t evidence = 0;
        for (std::size_t i = 0; i < n; ++i)
          if (known[i] && static_cast<int>(i) != shape.rowid_alias && sts[i] != 0) ++evidence;
        if (evidence < 2) continue;
        const std::size_t header_len = pos - h0;
        if (header_len >= 128) continue;
        if (h0 >= intact_from && pg[h0] != header_len) continue;

        std::uint64_t known_body = 0;
        for (std::size_t i = 0; i < n; ++i)
          if (known[i]) known_body += *serial_type_size(sts[i]);

        std::vector<std::uint64_t> options;
        if (unknown_count == 0) {
          options.push_back(sts.empty() ? 0 : sts[0]);
        } else {
          const auto a = shape.columns[unknown_col].affinity;
          // assume the cell runs exactly to the end of the region
          const std::uint64_t avail = end > pos ? end - pos : 0;
          if (avail >= known_body) {
            const std::uint64_t rest = avail - known_body;
            if (a == Affinity::Text || a == Affinity::Blob || a == Affinity::Numeric) options.push_back(13 + 2 * rest);
            if (a == Affinity::Blob) options.push_back(12 + 2 * rest);
          }
          if (a != Affinity::Text)
            for (std::uint64_t st : {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}) options.push_back(st);
          else
            options.push_back(0);
        }

        for (auto opt : options) {
          auto trial = sts;
          if (unknown_count == 1) {
            if (!serial_type_size(opt)) continue;
            trial[unknown_col] = opt;
          }
          std::uint64_t body = 0;
          for (auto st : trial) body += *serial_type_size(st);
          if (pos + body > end) continue;
          const std::uint64_t payload_size = header_len + body;
          if (varint_width(payload_size) > lead - 1) continue;
          if (db_.local_payload_size(payload_size) != payload_size) continue;

          CarvedRecord rec;
          rec.origin = origin;
          rec.page = number;
          rec.offset = static_cast<std::uint32_t>(o);
          std::vector<bool> all_known(n, true);
          decode_columns(pg.subspan(pos, static_cast<std::size_t>(body)), 0, trial, all_known, rec);
          // the overwritten header bytes mean the record cannot be proven whole
          if (unknown_count == 1 && options.size() > 1) rec.complete = false;
          rec.plausibility = plausibility_score(rec.columns, rec.decoded, &shape);
          const bool better = !best || rec.plausibility > best->record.plausibility + 1e-12 ||
                              (std::abs(rec.plausibility - best->record.plausibility) <= 1e-12 &&
                               rec.complete && !best->record.complete);
          if (better) {
            best = Candidate{std::move(rec), &shape};
            best_end = pos + static_cast<std::size_t>(body);
          }
        }
      }
    }
    if (!best) return std::nullopt;
    if (best->record.plausibility < std::max(opt_.threshold, kDamagedThreshold)) {
      ++result_.rejected;
      return std::nullopt;
    }
    if (!accept(best->record, best->shape, /*scored=*/true)) return std::nullopt;
    return best_end;
  }

  bool accept(CarvedRecord& rec, const TableShape* shape, bool scored = false) {
    if (!scored) rec.plausibility = plausibility_score(rec.columns, rec.decoded, shape);
    if (!shape) {
      // without a schema to lean on, demand readable text
      std::size_t text = 0;
      for (std::size_t i = 0; i < rec.columns.size(); ++i) {
        if (!rec.decoded[i]) continue;
        if (const auto* s = std::get_if<std::string>(&rec.columns[i])) {
          if (!printable_text(*s)) return false;
          if (!s->empty()) ++text;
        }
      }
      if (text == 0 || rec.columns.size() < 2) return false;
    }
    if (std::none_of(rec.decoded.begin(), rec.decoded.end(), [](bool d) { return d; })) return false;
    if (rec.plausibility < opt_.threshold) {
      ++result_.rejected;
      return false;
    }
    if (shape) rec.table_name = shape->name;
    const auto sig = signature(rec.columns);
    if (live_.count(sig)) return true;  // still a valid cell, just not deleted
    if (!seen_.insert(rec.table_name + '\x1e' + sig).second) return true;
    result_.records.push_back(std::move(rec));
    return true;
  }

  const Database& db_;
  CarveOptions opt_;
  TextEncoding enc_;
  std::vector<TableShape> shapes_;
  std::unordered_set<std::string> live_;
  std::unordered_set<std::string> seen_;
  std::vector<std::uint32_t> tree_pages_;
  std::vector<std::pair<std::uint32_t, int>> freelist_;  // page, trunk leaf count or -1 for leaves
  CarveResult result_;
};

}  // namespace

std::string_view to_string(CarveOrigin origin) noexcept {
  switch (origin) {
    case CarveOrigin::FreelistPage: return "freelist-page";
    case CarveOrigin::Freeblock: return "freeblock";
    case CarveOrigin::Unallocated: return "unallocated";
  }
  return "unknown";
}

double plausibility_score(const std::vector<Value>& columns, const std::vector<bool>& decoded,
                          const TableShape* shape) {
  std::size_t good = 0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i < decoded.size() && !decoded[i]) {
      ++counted;
      continue;
    }
    const auto& v = columns[i];
    switch (type_of(v)) {
      case ValueType::Null: break;
      case ValueType::Text:
        ++counted;
        if (printable_text(std::get<std::string>(v))) ++good;
        break;
      case ValueType::Integer: {
        ++counted;
        const auto x = std::get<std::int64_t>(v);
        if ((x >= 0 && x < (std::int64_t{1} << 32)) || timestamp_like(x)) ++good;
        break;
      }
      case ValueType::Float:
        ++counted;
        if (std::isfinite(std::get<double>(v))) ++good;
        break;
      case ValueType::Blob:
        ++counted;
        if (shape && i < shape->columns.size() && shape->columns[i].affinity == Affinity::Blob) ++good;
        break;
    }
  }
  return counted == 0 ? 0.0 : static_cast<double>(good) / static_cast<double>(counted);
}

CarveResult carve_freelist(const Database& db, const CarveOptions& options) {
  Carver c(db, options);
  c.carve_freelist();
  return c.take();
}

CarveResult carve_unallocated(const Database& db, const CarveOptions& options) {
  Carver c(db, options);
  c.carve_unallocated();
  return c.take();
}

CarveResult carve_sidecars(const Database& db, const CarveOptions& options) {
  Carver c(db, options);
  c.carve_sidecars();
  return c.take();
}

CarveResult carve_all(const Database& db, const CarveOptions& options) {
  Carver c(db, options);
  c.carve_freelist();
  c.carve_unallocated();
  c.carve_sidecars();
  return c.take();
}

}  // namespace d2wfp::sqlite
