#pragma once

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <sqlite3.h>

#include "d2wfp/bytes.hpp"
#include "d2wfp/sqlite/format.hpp"

namespace testing {

namespace fs = std::filesystem;

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("d2wfp-test-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_bytes(const fs::path& p, const std::string& data) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

inline std::string bytes_to_string(const d2wfp::Bytes& b) { return std::string(b.begin(), b.end()); }

/// Thin handle on the reference SQLite engine.
class Oracle {
 public:
  explicit Oracle(const fs::path& file) {
    if (sqlite3_open(file.string().c_str(), &db_) != SQLITE_OK) throw std::runtime_error("sqlite3_open failed");
  }
  ~Oracle() { sqlite3_close(db_); }
  Oracle(const Oracle&) = delete;
  Oracle& operator=(const Oracle&) = delete;

  void exec(const std::string& sql) {
    char* msg = nullptr;
    if (sqlite3_exec(db_, sql.c_str(), nullptr, nullptr, &msg) != SQLITE_OK) {
      std::string text = msg ? msg : "?";
      sqlite3_free(msg);
      throw std::runtime_error("sqlite3_exec: " + text + " in " + sql);
    }
  }

  /// Each row rendered column by column with a type tag, for comparison
  /// against our own decoder.
  std::vector<std::vector<std::string>> rows(const std::string& sql) {
    sqlite3_stmt* st = nullptr;
    if (sqlite3_prepare_v2(db_, sql.c_str(), -1, &st, nullptr) != SQLITE_OK)
      throw std::runtime_error("prepare failed: " + sql);
    std::vector<std::vector<std::string>> out;
    while (sqlite3_step(st) == SQLITE_ROW) {
      std::vector<std::string> row;
      for (int i = 0; i < sqlite3_column_count(st); ++i) row.push_back(render(st, i));
      out.push_back(std::move(row));
    }
    sqlite3_finalize(st);
    return out;
  }

  sqlite3* handle() { return db_; }

  static std::string hex(const std::string& s) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned char c : s) {
      out += digits[c >> 4];
      out += digits[c & 15];
    }
    return out;
  }

 private:
  static std::string render(sqlite3_stmt* st, int i) {
    switch (sqlite3_column_type(st, i)) {
      case SQLITE_NULL: return "null";
      case SQLITE_INTEGER: return "i:" + std::to_string(sqlite3_column_int64(st, i));
      case SQLITE_FLOAT: {
        const double d = sqlite3_column_double(st, i);
        std::string bits(sizeof d, '\0');
        std::memcpy(bits.data(), &d, sizeof d);
        return "f:" + hex(bits);
      }
      case SQLITE_TEXT:
        return "t:" + std::string(reinterpret_cast<const char*>(sqlite3_column_text(st, i)),
                                  static_cast<std::size_t>(sqlite3_column_bytes(st, i)));
      default: {
        const auto* p = static_cast<const char*>(sqlite3_column_blob(st, i));
        return "b:" + hex(std::string(p ? p : "", static_cast<std::size_t>(sqlite3_column_bytes(st, i))));
      }
    }
  }

  sqlite3* db_ = nullptr;
};

/// Our decoded value in the oracle's rendering.
inline std::string render(const d2wfp::sqlite::Value& v) {
  if (std::holds_alternative<std::monostate>(v)) return "null";
  if (const auto* i = std::get_if<std::int64_t>(&v)) return "i:" + std::to_string(*i);
  if (const auto* d = std::get_if<double>(&v)) {
    std::string bits(sizeof *d, '\0');
    std::memcpy(bits.data(), d, sizeof *d);
    return "f:" + Oracle::hex(bits);
  }
  if (const auto* t = std::get_if<std::string>(&v)) return "t:" + *t;
  const auto& b = std::get<d2wfp::Bytes>(v);
  return "b:" + Oracle::hex(std::string(b.begin(), b.end()));
}

// Encoder written from the file-format description, independent of read_varint.
inline d2wfp::Bytes encode_varint(std::uint64_t v) {
  d2wfp::Bytes out;
  if (v > 0x00ffffffffffffffULL) {
    out.resize(9);
    out[8] = static_cast<std::uint8_t>(v & 0xff);
    v >>= 8;
    for (int i = 7; i >= 0; --i) {
      out[i] = static_cast<std::uint8_t>((v & 0x7f) | 0x80);
      v >>= 7;
    }
    return out;
  }
  do {
    out.insert(out.begin(), static_cast<std::uint8_t>((v & 0x7f) | (out.empty() ? 0 : 0x80)));
    v >>= 7;
  } while (v != 0);
  return out;
}

/// A table with a random column layout filled through the reference engine.
struct RandomTable {
  std::string name = "t";
  std::size_t rows = 0;
  std::uint32_t page_size = 4096;
  int columns = 0;
};

inline RandomTable make_random_table(const fs::path& file, std::uint64_t seed, std::size_t max_rows) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::uint64_t n) { return static_cast<std::size_t>(rng() % n); };
  RandomTable t;
  static constexpr std::uint32_t kPageSizes[] = {512, 1024, 2048, 4096, 8192, 16384, 32768, 65536};
  t.page_size = kPageSizes[pick(8)];
  t.columns = 1 + static_cast<int>(pick(8));
  t.rows = pick(max_rows + 1);
  static constexpr const char* kTypes[] = {"INTEGER", "TEXT", "BLOB", "REAL", "NUMERIC", ""};
  std::vector<int> types;
  const bool alias = pick(3) == 0;
  std::string sql = "CREATE TABLE t(";
  for (int c = 0; c < t.columns; ++c) {
    types.push_back(c == 0 && alias ? 0 : static_cast<int>(pick(6)));
    sql += (c ? ", c" : "c") + std::to_string(c) + " " + kTypes[types.back()];
    if (c == 0 && alias) sql += " PRIMARY KEY";
  }
  sql += ")";

  Oracle db(file);
  db.exec("PRAGMA page_size=" + std::to_string(t.page_size));
  db.exec(sql);
  db.exec("BEGIN");
  std::string insert = "INSERT INTO t VALUES(";
  for (int c = 0; c < t.columns; ++c) insert += c ? ",?" : "?";
  insert += ")";
  sqlite3_stmt* st = nullptr;
  sqlite3_prepare_v2(db.handle(), insert.c_str(), -1, &st, nullptr);

  auto random_text = [&](std::size_t max_len) {
    static constexpr const char* kPieces[] = {"a", "Z", "0", " ", ".onion", "/", "\xc3\xa9", "\xe2\x80\x94", "q", "~"};
    std::string out;
    const std::size_t n = pick(max_len + 1);
    while (out.size() < n) out += kPieces[pick(10)];
    return out;
  };
  std::int64_t next_key = 1;
  for (std::size_t r = 0; r < t.rows; ++r) {
    for (int c = 0; c < t.columns; ++c) {
      const int idx = c + 1;
      if (c == 0 && alias) {
        next_key += 1 + static_cast<std::int64_t>(pick(5));
        sqlite3_bind_int64(st, idx, next_key);
        continue;
      }
      const std::size_t big = pick(50) == 0 ? 3 * t.page_size : 120;  // occasional overflow chains
      switch (pick(types[c] == 3 ? 3 : 6)) {
        case 0: sqlite3_bind_null(st, idx); break;
        case 1: {
          // fractional reals stay reals under every affinity
          const double d = static_cast<double>(static_cast<std::int64_t>(rng() % 2000001) - 1000000) + 0.25;
          sqlite3_bind_double(st, idx, d);
          break;
        }
        case 2: {
          // numeric-looking text would be converted by REAL affinity
          const auto text = (types[c] == 3 ? "x" : "") + random_text(big);
          sqlite3_bind_text(st, idx, text.c_str(), static_cast<int>(text.size()), SQLITE_TRANSIENT);
          break;
        }
        case 3: {
          static constexpr std::int64_t kInts[] = {0, 1, -1, 127, 128, 32767, -32768, 8388607, 2147483647,
                                                   140737488355327, 9223372036854775807LL};
          const std::int64_t v = pick(2) ? kInts[pick(11)] : static_cast<std::int64_t>(rng());
          sqlite3_bind_int64(st, idx, v);
          break;
        }
        case 4: {
          std::string blob(pick(big + 1), '\0');
          for (auto& ch : blob) ch = static_cast<char>(rng());
          sqlite3_bind_blob(st, idx, blob.data(), static_cast<int>(blob.size()), SQLITE_TRANSIENT);
          break;
        }
        default: sqlite3_bind_int64(st, idx, static_cast<std::int64_t>(pick(1000))); break;
      }
    }
    sqlite3_step(st);
    sqlite3_reset(st);
  }
  sqlite3_finalize(st);
  db.exec("COMMIT");
  return t;
}

}  // namespace testing
