#include "d2wfp/sqlite/database.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "d2wfp/error.hpp"

namespace d2wfp::sqlite {

namespace fs = std::filesystem;

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string unquote_identifier(std::string_view s) {
  if (s.size() >= 2) {
    const char a = s.front(), b = s.back();
    if ((a == '"' && b == '"') || (a == '`' && b == '`') || (a == '\'' && b == '\'') ||
        (a == '[' && b == ']'))
      return std::string(s.substr(1, s.size() - 2));
  }
  return std::string(s);
}

// Splits on separators at parenthesis depth zero, honouring quotes.
std::vector<std::string_view> split_top_level(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  int depth = 0;
  char quote = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (quote) {
      if (c == quote) quote = 0;
      continue;
    }
    if (c == '"' || c == '\'' || c == '`') quote = c;
    else if (c == '[') quote = ']';
    else if (c == '(') ++depth;
    else if (c == ')') --depth;
    else if (c == sep && depth == 0) {
      parts.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  parts.push_back(s.substr(start));
  return parts;
}

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '"' || c == '\'' || c == '`' || c == '[') {
      const char close = c == '[' ? ']' : c;
      auto end = s.find(close, i + 1);
      if (end == std::string_view::npos) end = s.size() - 1;
      tokens.emplace_back(s.substr(i, end - i + 1));
      i = end + 1;
    } else if (c == '(') {
      int depth = 0;
      std::size_t j = i;
      for (; j < s.size(); ++j) {
        if (s[j] == '(') ++depth;
        if (s[j] == ')' && --depth == 0) break;
      }
      tokens.emplace_back(s.substr(i, j - i + 1));
      i = j + 1;
    } else {
      std::size_t j = i;
      while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j])) && s[j] != '(') ++j;
      tokens.emplace_back(s.substr(i, j - i));
      i = j;
    }
  }
  return tokens;
}

Affinity affinity_of(std::string_view declared) {
  const auto t = upper(declared);
  if (t.find("INT") != std::string::npos) return Affinity::Integer;
  if (t.find("CHAR") != std::string::npos || t.find("CLOB") != std::string::npos ||
      t.find("TEXT") != std::string::npos)
    return Affinity::Text;
  if (t.empty() || t.find("BLOB") != std::string::npos) return Affinity::Blob;
  if (t.find("REAL") != std::string::npos || t.find("FLOA") != std::string::npos ||
      t.find("DOUB") != std::string::npos)
    return Affinity::Real;
  return Affinity::Numeric;
}

bool is_constraint_keyword(const std::string& upper_token) {
  static const std::unordered_set<std::string> kWords = {
      "CONSTRAINT", "PRIMARY", "NOT",        "NULL",      "UNIQUE", "CHECK",
      "DEFAULT",    "COLLATE", "REFERENCES", "GENERATED", "AS"};
  return kWords.count(upper_token) != 0;
}

}  // namespace

int TableShape::column_index(std::string_view column) const noexcept {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].name == column) return static_cast<int>(i);
  return -1;
}

std::optional<BtreePageHeader> parse_page_header(ByteView page, std::uint32_t page_number) {
  BtreePageHeader h;
  h.header_offset = page_number == 1 ? kHeaderSize : 0;
  if (page.size() < h.header_offset + 12) return std::nullopt;
  const auto* p = page.data() + h.header_offset;
  switch (p[0]) {
    case 0x02:
    case 0x05:
    case 0x0A:
    case 0x0D: break;
    default: return std::nullopt;
  }
  h.type = static_cast<PageType>(p[0]);
  h.first_freeblock = load_be16(p + 1);
  h.cell_count = load_be16(p + 3);
  const auto cs = load_be16(p + 5);
  h.content_start = cs == 0 ? 65536u : cs;
  h.fragmented = p[7];
  if (h.type == PageType::TableInterior || h.type == PageType::IndexInterior) {
    h.right_child = load_be32(p + 8);
    h.header_size = 12;
  }
  return h;
}

std::optional<TableShape> parse_create_table(std::string_view name, std::string_view sql) {
  const auto open = sql.find('(');
  const auto close = sql.rfind(')');
  if (open == std::string_view::npos || close == std::string_view::npos || close <= open)
    return std::nullopt;
  const auto tail = upper(sql.substr(close + 1));
  if (tail.find("WITHOUT") != std::string::npos) return std::nullopt;

  TableShape shape;
  shape.name = std::string(name);
  std::vector<std::string> table_pk;
  for (auto def : split_top_level(sql.substr(open + 1, close - open - 1), ',')) {
    const auto tokens = tokenize(def);
    if (tokens.empty()) continue;
    const auto first = upper(tokens[0]);
    if (first == "CONSTRAINT" || first == "UNIQUE" || first == "CHECK" || first == "FOREIGN") continue;
    if (first == "PRIMARY") {
      // table-level PRIMARY KEY (col)
      for (const auto& t : tokens) {
        if (!t.empty() && t.front() == '(') {
          for (auto col : split_top_level(std::string_view(t).substr(1, t.size() - 2), ',')) {
            auto col_tokens = tokenize(col);
            if (!col_tokens.empty()) table_pk.push_back(unquote_identifier(col_tokens[0]));
          }
        }
      }
      continue;
    }
    Column column;
    column.name = unquote_identifier(tokens[0]);
    std::size_t i = 1;
    for (; i < tokens.size(); ++i) {
      const auto u = upper(tokens[i]);
      if (is_constraint_keyword(u)) break;
      if (!column.declared_type.empty()) column.declared_type.push_back(' ');
      column.declared_type += tokens[i];
    }
    column.affinity = affinity_of(column.declared_type);
    bool primary = false;
    bool desc = false;
    for (std::size_t k = i; k + 1 < tokens.size(); ++k) {
      if (upper(tokens[k]) == "PRIMARY" && upper(tokens[k + 1]) == "KEY") {
        primary = true;
        if (k + 2 < tokens.size() && upper(tokens[k + 2]) == "DESC") desc = true;
      }
    }
    if (primary && !desc && upper(column.declared_type) == "INTEGER")
      shape.rowid_alias = static_cast<int>(shape.columns.size());
    shape.columns.push_back(std::move(column));
  }
  if (shape.rowid_alias < 0 && table_pk.size() == 1) {
    const int idx = shape.column_index(table_pk[0]);
    if (idx >= 0 && upper(shape.columns[static_cast<std::size_t>(idx)].declared_type) == "INTEGER")
      shape.rowid_alias = idx;
  }
  if (shape.columns.empty()) return std::nullopt;
  return shape;
}

Database::Database(Bytes image) : image_(std::move(image)), header_(parse_header(image_)) {
  const auto in_file = static_cast<std::uint32_t>(image_.size() / header_.page_size);
  const bool header_count_valid =
      header_.page_count != 0 && header_.change_counter == header_.version_valid_for;
  page_count_ = header_count_valid ? std::min(header_.page_count, in_file) : in_file;
}

Database Database::open(const fs::path& path) {
  Database db(read_file(path));
  for (const char* suffix : {"-wal", "-journal"}) {
    auto side = path;
    side += suffix;
    std::error_code ec;
    if (fs::is_regular_file(side, ec) && fs::file_size(side, ec) > 0)
      db.add_sidecar({std::string(suffix + 1), read_file(side)});
  }
  return db;
}

ByteView Database::page(std::uint32_t number) const {
  if (number == 0 || number > page_count_)
    throw Error(ErrorCode::CorruptPage, "page " + std::to_string(number) + " out of range");
  return ByteView(image_).subspan(static_cast<std::size_t>(number - 1) * header_.page_size,
                                  header_.page_size);
}

std::size_t Database::local_payload_size(std::uint64_t p) const noexcept {
  const std::uint64_t u = usable_size();
  const std::uint64_t x = u - 35;
  if (p <= x) return static_cast<std::size_t>(p);
  const std::uint64_t m = ((u - 12) * 32 / 255) - 23;
  const std::uint64_t k = m + ((p - m) % (u - 4));
  return static_cast<std::size_t>(k <= x ? k : m);
}

Bytes Database::read_payload(std::uint32_t page_number, std::size_t offset, std::uint64_t size) const {
  const auto pg = page(page_number);
  const auto local = local_payload_size(size);
  const std::size_t usable = usable_size();
  if (offset + local > usable) throw Error(ErrorCode::Malformed, "cell payload runs past page end");
  Bytes out(pg.begin() + static_cast<std::ptrdiff_t>(offset),
            pg.begin() + static_cast<std::ptrdiff_t>(offset + local));
  if (local == size) return out;
  if (offset + local + 4 > usable) throw Error(ErrorCode::Malformed, "missing overflow pointer");
  std::uint32_t next = load_be32(pg.data() + offset + local);
  std::size_t hops = 0;
  while (out.size() < size) {
    if (next == 0) throw Error(ErrorCode::Malformed, "overflow chain ends early");
    if (++hops > overflow_cap_) throw Error(ErrorCode::Malformed, "overflow chain exceeds cap");
    const auto ov = page(next);
    const std::size_t take = std::min<std::uint64_t>(usable - 4, size - out.size());
    out.insert(out.end(), ov.begin() + 4, ov.begin() + 4 + static_cast<std::ptrdiff_t>(take));
    next = load_be32(ov.data());
  }
  return out;
}

std::vector<LiveRecord> walk_btree(const Database& db, std::uint32_t root_page, std::string_view table_name) {
  std::vector<LiveRecord> out;
  std::unordered_set<std::uint32_t> visited;
  const auto enc = db.header().text_encoding;

  // explicit stack of (page, next child index) keeps deep trees off the call stack
  struct Frame {
    std::uint32_t page;
    std::size_t next_child;
  };
  std::vector<Frame> stack;
  auto enter = [&](std::uint32_t number) {
    if (!visited.insert(number).second)
      throw Error(ErrorCode::CorruptTree, "page " + std::to_string(number) + " visited twice");
    stack.push_back({number, 0});
  };
  enter(root_page);

  while (!stack.empty()) {
    auto& frame = stack.back();
    const auto pg = db.page(frame.page);
    const auto hdr = parse_page_header(pg, frame.page);
    if (!hdr || (hdr->type != PageType::TableInterior && hdr->type != PageType::TableLeaf))
      throw Error(ErrorCode::CorruptPage, "page " + std::to_string(frame.page) + " is not a table page");
    const std::size_t ptr_base = hdr->header_offset + hdr->header_size;
    if (hdr->pointer_array_end() > db.usable_size())
      throw Error(ErrorCode::CorruptPage, "cell pointer array overflows page");

    if (hdr->type == PageType::TableLeaf) {
      const std::uint32_t number = frame.page;
      stack.pop_back();
      for (std::size_t i = 0; i < hdr->cell_count; ++i) {
        const std::size_t cell = load_be16(pg.data() + ptr_base + 2 * i);
        if (cell < hdr->pointer_array_end() || cell >= db.usable_size())
          throw Error(ErrorCode::CorruptPage, "cell pointer out of range");
        const auto psize = read_varint(pg.first(db.usable_size()), cell);
        const auto rowid = read_varint(pg.first(db.usable_size()), cell + psize.width);
        const auto payload = db.read_payload(number, cell + psize.width + rowid.width, psize.value);
        LiveRecord rec;
        rec.table_name = std::string(table_name);
        rec.rowid = static_cast<std::int64_t>(rowid.value);
        rec.columns = decode_record(payload, enc);
        rec.page = number;
        rec.cell_offset = static_cast<std::uint32_t>(cell);
        out.push_back(std::move(rec));
      }
      continue;
    }

    if (frame.next_child < hdr->cell_count) {
      const std::size_t cell = load_be16(pg.data() + ptr_base + 2 * frame.next_child);
      if (cell + 4 > db.usable_size()) throw Error(ErrorCode::CorruptPage, "cell pointer out of range");
      ++frame.next_child;
      enter(load_be32(pg.data() + cell));
    } else if (frame.next_child == hdr->cell_count) {
      ++frame.next_child;
      enter(hdr->right_child);
    } else {
      stack.pop_back();
    }
  }
  return out;
}

std::vector<SchemaEntry> Database::schema() const {
  std::vector<SchemaEntry> entries;
  for (const auto& rec : walk_btree(*this, 1, "sqlite_master")) {
    if (rec.columns.size() < 5) continue;
    auto text = [&](std::size_t i) {
      const auto* s = std::get_if<std::string>(&rec.columns[i]);
      return s ? *s : std::string{};
    };
    SchemaEntry e;
    e.type = text(0);
    e.name = text(1);
    e.table_name = text(2);
    if (const auto* r = std::get_if<std::int64_t>(&rec.columns[3]))
      e.root_page = static_cast<std::uint32_t>(*r);
    e.sql = text(4);
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<TableShape> Database::table_shapes() const {
  std::vector<TableShape> shapes;
  for (const auto& e : schema()) {
    if (e.type != "table" || e.root_page == 0) continue;
    auto shape = parse_create_table(e.name, e.sql);
    if (!shape) continue;
    shape->root_page = e.root_page;
    shapes.push_back(std::move(*shape));
  }
  return shapes;
}

std::optional<TableShape> Database::table_shape(std::string_view table) const {
  for (auto& s : table_shapes())
    if (s.name == table) return s;
  return std::nullopt;
}

std::vector<LiveRecord> Database::read_table(std::string_view table) const {
  const auto shape = table_shape(table);
  if (!shape) throw Error(ErrorCode::NotFound, "no table " + std::string(table));
  auto rows = walk_btree(*this, shape->root_page, table);
  for (auto& r : rows) {
    // rows written before an ALTER TABLE ADD COLUMN are short
    if (r.columns.size() < shape->columns.size()) r.columns.resize(shape->columns.size());
    if (shape->rowid_alias >= 0) {
      auto& v = r.columns[static_cast<std::size_t>(shape->rowid_alias)];
      if (type_of(v) == ValueType::Null) v = r.rowid;
    }
  }
  return rows;
}

}  // namespace d2wfp::sqlite
