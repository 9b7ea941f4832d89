#include "d2wfp/sqlite/format.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "d2wfp/error.hpp"

namespace d2wfp::sqlite {

namespace {

constexpr char kMagic[] = "SQLite format 3";  // plus the terminating NUL: 16 bytes

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

}  // namespace

DbHeader parse_header(ByteView b) {
  if (b.size() < kHeaderSize) throw Error(ErrorCode::Truncated, "database header needs 100 bytes");
  if (std::memcmp(b.data(), kMagic, 16) != 0) throw Error(ErrorCode::NotSqlite, "bad magic");
  DbHeader h;
  const std::uint32_t raw_page = load_be16(b.data() + 16);
  if (raw_page == 1) {
    h.page_size = 65536;
  } else if (raw_page >= 512 && raw_page <= 32768 && std::has_single_bit(raw_page)) {
    h.page_size = raw_page;
  } else {
    throw Error(ErrorCode::CorruptHeader, "invalid page size " + std::to_string(raw_page));
  }
  h.reserved_bytes = b[20];
  if (h.page_size - h.reserved_bytes < 480) throw Error(ErrorCode::CorruptHeader, "usable size too small");
  h.change_counter = load_be32(b.data() + 24);
  h.page_count = load_be32(b.data() + 28);
  h.freelist_head = load_be32(b.data() + 32);
  h.freelist_count = load_be32(b.data() + 36);
  h.schema_format = load_be32(b.data() + 44);
  h.version_valid_for = load_be32(b.data() + 92);
  switch (load_be32(b.data() + 56)) {
    case 0:  // not yet set on a brand-new file
    case 1: h.text_encoding = TextEncoding::Utf8; break;
    case 2: h.text_encoding = TextEncoding::Utf16le; break;
    case 3: h.text_encoding = TextEncoding::Utf16be; break;
    default: throw Error(ErrorCode::CorruptHeader, "invalid text encoding");
  }
  return h;
}

std::optional<Varint> try_read_varint(ByteView b, std::size_t offset) noexcept {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 9; ++i) {
    if (offset + i >= b.size()) return std::nullopt;
    const auto byte = b[offset + i];
    if (i == 8) return Varint{(v << 8) | byte, 9};
    v = (v << 7) | (byte & 0x7F);
    if ((byte & 0x80) == 0) return Varint{v, i + 1};
  }
  return std::nullopt;
}

Varint read_varint(ByteView b, std::size_t offset) {
  auto v = try_read_varint(b, offset);
  if (!v) throw Error(ErrorCode::Truncated, "varint runs past end of input");
  return *v;
}

std::size_t varint_width(std::uint64_t v) noexcept {
  if (v > 0x00FFFFFFFFFFFFFFull) return 9;
  std::size_t n = 1;
  while (v >>= 7) ++n;
  return n;
}

ValueType type_of(const Value& v) noexcept { return static_cast<ValueType>(v.index()); }

std::optional<std::size_t> serial_type_size(std::uint64_t st) noexcept {
  static constexpr std::size_t kFixed[] = {0, 1, 2, 3, 4, 6, 8, 8, 0, 0};
  if (st < 10) return kFixed[st];
  if (st == 10 || st == 11) return std::nullopt;
  if ((st - 12) / 2 > (std::uint64_t{1} << 40)) return std::nullopt;
  return static_cast<std::size_t>((st - 12) / 2);
}

std::string utf16_to_utf8(ByteView b, bool big_endian, bool* lossy) {
  std::string out;
  out.reserve(b.size() / 2);
  auto unit = [&](std::size_t i) -> std::uint32_t {
    return big_endian ? (std::uint32_t{b[i]} << 8) | b[i + 1] : (std::uint32_t{b[i + 1]} << 8) | b[i];
  };
  std::size_t i = 0;
  for (; i + 1 < b.size(); i += 2) {
    std::uint32_t u = unit(i);
    if (u >= 0xD800 && u <= 0xDBFF) {
      if (i + 3 < b.size()) {
        const auto lo = unit(i + 2);
        if (lo >= 0xDC00 && lo <= 0xDFFF) {
          append_utf8(out, 0x10000 + ((u - 0xD800) << 10) + (lo - 0xDC00));
          i += 2;
          continue;
        }
      }
      u = 0xFFFD;
      if (lossy) *lossy = true;
    } else if (u >= 0xDC00 && u <= 0xDFFF) {
      u = 0xFFFD;
      if (lossy) *lossy = true;
    }
    append_utf8(out, u);
  }
  if (i < b.size()) {
    append_utf8(out, 0xFFFD);
    if (lossy) *lossy = true;
  }
  return out;
}

Value decode_value(std::uint64_t st, ByteView body, TextEncoding enc, bool* lossy) {
  switch (st) {
    case 0: return std::monostate{};
    case 8: return std::int64_t{0};
    case 9: return std::int64_t{1};
    case 7: {
      std::uint64_t bits = 0;
      for (int i = 0; i < 8; ++i) bits = (bits << 8) | body[static_cast<std::size_t>(i)];
      return std::bit_cast<double>(bits);
    }
    default: break;
  }
  if (st <= 6) {
    const std::size_t n = *serial_type_size(st);
    std::uint64_t u = 0;
    for (std::size_t i = 0; i < n; ++i) u = (u << 8) | body[i];
    // sign-extend from n bytes
    const unsigned shift = static_cast<unsigned>(64 - 8 * n);
    return static_cast<std::int64_t>(u << shift) >> shift;
  }
  const std::size_t n = *serial_type_size(st);
  if (st % 2 == 0) return Bytes(body.begin(), body.begin() + static_cast<std::ptrdiff_t>(n));
  const ByteView text = body.first(n);
  if (enc == TextEncoding::Utf8) return std::string(reinterpret_cast<const char*>(text.data()), n);
  return utf16_to_utf8(text, enc == TextEncoding::Utf16be, lossy);
}

RecordLayout parse_record_header(ByteView payload) {
  RecordLayout layout;
  const auto hv = read_varint(payload, 0);
  layout.header_size = hv.value;
  if (hv.value < hv.width || hv.value > payload.size())
    throw Error(ErrorCode::Malformed, "record header length out of range");
  std::size_t pos = hv.width;
  while (pos < hv.value) {
    const auto st = try_read_varint(payload.first(static_cast<std::size_t>(hv.value)), pos);
    if (!st) throw Error(ErrorCode::Malformed, "serial type crosses header end");
    const auto size = serial_type_size(st->value);
    if (!size) throw Error(ErrorCode::Malformed, "reserved serial type");
    layout.serial_types.push_back(st->value);
    layout.body_size += *size;
    pos += st->width;
  }
  return layout;
}

std::vector<Value> decode_record(ByteView payload, TextEncoding enc, bool* lossy) {
  const auto layout = parse_record_header(payload);
  if (layout.header_size + layout.body_size > payload.size())
    throw Error(ErrorCode::Malformed, "serial types exceed payload");
  std::vector<Value> values;
  values.reserve(layout.serial_types.size());
  std::size_t pos = static_cast<std::size_t>(layout.header_size);
  for (auto st : layout.serial_types) {
    const auto n = *serial_type_size(st);
    values.push_back(decode_value(st, payload.subspan(pos, n), enc, lossy));
    pos += n;
  }
  return values;
}

std::string render_value(const Value& v) {
  switch (type_of(v)) {
    case ValueType::Null: return "null";
    case ValueType::Integer: return "i:" + std::to_string(std::get<std::int64_t>(v));
    case ValueType::Float: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "f:%.17g", std::get<double>(v));
      return buf;
    }
    case ValueType::Text: return "t:" + std::get<std::string>(v);
    case ValueType::Blob: return "b:" + to_hex(std::get<Bytes>(v));
  }
  return {};
}

std::string render_values(const std::vector<Value>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out.push_back('\x1f');
    out += render_value(values[i]);
  }
  return out;
}

}  // namespace d2wfp::sqlite
