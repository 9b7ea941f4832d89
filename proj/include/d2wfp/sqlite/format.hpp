#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "d2wfp/bytes.hpp"

namespace d2wfp::sqlite {

enum class TextEncoding { Utf8 = 1, Utf16le = 2, Utf16be = 3 };

struct DbHeader {
  std::uint32_t page_size = 4096;
  std::uint8_t reserved_bytes = 0;
  std::uint32_t change_counter = 0;
  std::uint32_t page_count = 0;  // in-header size; may be stale in legacy files
  std::uint32_t freelist_head = 0;
  std::uint32_t freelist_count = 0;
  std::uint32_t schema_format = 0;
  std::uint32_t version_valid_for = 0;
  TextEncoding text_encoding = TextEncoding::Utf8;

  std::uint32_t usable_size() const noexcept { return page_size - reserved_bytes; }
};

inline constexpr std::size_t kHeaderSize = 100;

/// Decodes the 100-byte database header. Throws NotSqlite on a magic mismatch,
/// CorruptHeader on an invalid page size or encoding, Truncated if short.
DbHeader parse_header(ByteView bytes);

struct Varint {
  std::uint64_t value = 0;
  std::size_t width = 0;
};

/// Big-endian base-128 varint; the ninth byte contributes all eight bits.
/// Throws Truncated when the input ends mid-varint.
Varint read_varint(ByteView bytes, std::size_t offset);

/// Non-throwing variant for carving loops.
std::optional<Varint> try_read_varint(ByteView bytes, std::size_t offset) noexcept;

std::size_t varint_width(std::uint64_t value) noexcept;

using Value = std::variant<std::monostate, std::int64_t, double, std::string, Bytes>;

enum class ValueType { Null, Integer, Float, Text, Blob };

ValueType type_of(const Value& v) noexcept;

/// Content length for a serial type; nullopt for the reserved types 10 and 11.
std::optional<std::size_t> serial_type_size(std::uint64_t serial_type) noexcept;

/// Decodes one column body. The caller guarantees `body` holds at least
/// serial_type_size(serial_type) bytes. `lossy` is set when text needed
/// replacement characters.
Value decode_value(std::uint64_t serial_type, ByteView body, TextEncoding encoding, bool* lossy = nullptr);

struct RecordLayout {
  std::uint64_t header_size = 0;
  std::vector<std::uint64_t> serial_types;
  std::uint64_t body_size = 0;
};

/// Parses the record header only. Throws Malformed/Truncated.
RecordLayout parse_record_header(ByteView payload);

/// Decodes a full record payload. Throws Malformed when the serial types
/// describe more bytes than the payload holds.
std::vector<Value> decode_record(ByteView payload, TextEncoding encoding = TextEncoding::Utf8,
                                 bool* lossy = nullptr);

/// Stable textual rendering used for dedup keys, manifests and test diffs.
std::string render_value(const Value& v);
std::string render_values(const std::vector<Value>& values);

std::string utf16_to_utf8(ByteView bytes, bool big_endian, bool* lossy = nullptr);

}  // namespace d2wfp::sqlite
