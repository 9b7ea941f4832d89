#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "d2wfp/sqlite/format.hpp"

namespace d2wfp::sqlite {

enum class PageType : std::uint8_t {
  IndexInterior = 0x02,
  TableInterior = 0x05,
  IndexLeaf = 0x0A,
  TableLeaf = 0x0D,
};

enum class Affinity { Integer, Text, Blob, Real, Numeric };

struct Column {
  std::string name;
  std::string declared_type;
  Affinity affinity = Affinity::Blob;
};

/// Column layout of one rowid table, derived from its CREATE TABLE text.
struct TableShape {
  std::string name;
  std::uint32_t root_page = 0;
  std::vector<Column> columns;
  int rowid_alias = -1;  // index of an INTEGER PRIMARY KEY column, stored as NULL on disk

  int column_index(std::string_view column) const noexcept;
};

struct SchemaEntry {
  std::string type;
  std::string name;
  std::string table_name;
  std::uint32_t root_page = 0;
  std::string sql;
};

struct LiveRecord {
  std::string table_name;
  std::int64_t rowid = 0;
  std::vector<Value> columns;
  std::uint32_t page = 0;
  std::uint32_t cell_offset = 0;
};

struct BtreePageHeader {
  PageType type;
  std::uint16_t first_freeblock = 0;
  std::uint16_t cell_count = 0;
  std::uint32_t content_start = 0;  // 0 on disk means 65536
  std::uint8_t fragmented = 0;
  std::uint32_t right_child = 0;    // interior pages only
  std::size_t header_offset = 0;    // 100 on page 1, else 0
  std::size_t header_size = 8;

  std::size_t pointer_array_end() const noexcept { return header_offset + header_size + 2u * cell_count; }
};

/// Parses a b-tree page header; nullopt if the type byte is not a b-tree type.
std::optional<BtreePageHeader> parse_page_header(ByteView page, std::uint32_t page_number);

/// Splits a CREATE TABLE statement into columns. Returns nullopt for
/// WITHOUT ROWID tables and statements it cannot read.
std::optional<TableShape> parse_create_table(std::string_view name, std::string_view sql);

struct Sidecar {
  std::string label;  // "wal" or "journal"
  Bytes bytes;
};

/// Read-only view over an immutable database image.
class Database {
 public:
  explicit Database(Bytes image);

  /// Loads `path` plus any sibling `-wal` / `-journal` file as raw sidecars.
  static Database open(const std::filesystem::path& path);

  const DbHeader& header() const noexcept { return header_; }
  ByteView image() const noexcept { return image_; }

  /// Pages actually present, reconciled between the header and the file size.
  std::uint32_t page_count() const noexcept { return page_count_; }
  std::uint32_t usable_size() const noexcept { return header_.usable_size(); }

  /// 1-based page access; throws CorruptPage when out of range.
  ByteView page(std::uint32_t number) const;

  std::vector<SchemaEntry> schema() const;
  std::vector<TableShape> table_shapes() const;
  std::optional<TableShape> table_shape(std::string_view table) const;

  /// All rows of a table in rowid order with the rowid alias column filled in.
  /// Throws NotFound for an unknown table.
  std::vector<LiveRecord> read_table(std::string_view table) const;

  /// Reassembles a cell payload, following overflow pages when needed.
  /// Throws Malformed when the chain is longer than the cap or leaves the file.
  Bytes read_payload(std::uint32_t page_number, std::size_t payload_offset, std::uint64_t payload_size) const;

  /// Bytes of a cell payload kept on the b-tree page itself.
  std::size_t local_payload_size(std::uint64_t payload_size) const noexcept;

  const std::vector<Sidecar>& sidecars() const noexcept { return sidecars_; }
  void add_sidecar(Sidecar sidecar) { sidecars_.push_back(std::move(sidecar)); }

  std::size_t overflow_cap() const noexcept { return overflow_cap_; }
  void set_overflow_cap(std::size_t pages) noexcept { overflow_cap_ = pages; }

 private:
  Bytes image_;
  DbHeader header_;
  std::uint32_t page_count_ = 0;
  std::size_t overflow_cap_ = 1024;
  std::vector<Sidecar> sidecars_;
};

/// Depth-first walk of a table b-tree; rows come out in rowid order.
/// Throws CorruptTree on a page cycle and CorruptPage on a non-table page.
std::vector<LiveRecord> walk_btree(const Database& db, std::uint32_t root_page, std::string_view table_name);

}  // namespace d2wfp::sqlite
