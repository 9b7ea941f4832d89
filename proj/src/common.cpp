#include <array>
#include <fstream>
#include <iterator>

#include "d2wfp/bytes.hpp"
#include "d2wfp/error.hpp"

namespace d2wfp {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyId: return "EmptyId";
    case ErrorCode::DuplicateCase: return "DuplicateCase";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidVolatility: return "InvalidVolatility";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::NotSqlite: return "NotSqlite";
    case ErrorCode::CorruptHeader: return "CorruptHeader";
    case ErrorCode::Truncated: return "Truncated";
    case ErrorCode::Malformed: return "Malformed";
    case ErrorCode::CorruptTree: return "CorruptTree";
    case ErrorCode::CorruptPage: return "CorruptPage";
    case ErrorCode::StoreAbsent: return "StoreAbsent";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NotHive: return "NotHive";
    case ErrorCode::CorruptHive: return "CorruptHive";
    case ErrorCode::Invalid: return "Invalid";
    case ErrorCode::Config: return "Config";
    case ErrorCode::EmptyCase: return "EmptyCase";
    case ErrorCode::IntegrityFailure: return "IntegrityFailure";
  }
  return "Unknown";
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  Bytes out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::IoError, "read failed: " + path.string());
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  const auto b = read_file(path);
  return std::string(b.begin(), b.end());
}

Bytes read_file_prefix(const std::filesystem::path& path, std::size_t count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  Bytes out(count);
  in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(count));
  out.resize(static_cast<std::size_t>(in.gcount()));
  return out;
}

void write_file(const std::filesystem::path& path, ByteView data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  write_file(path, as_bytes(text));
}

std::string to_hex(ByteView data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0F]);
  }
  return out;
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

bool is_valid_utf8(std::string_view s) noexcept {
  std::size_t i = 0;
  const auto n = s.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > n) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    static constexpr std::array<std::uint32_t, 5> kMin{0, 0, 0x80, 0x800, 0x10000};
    if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += len;
  }
  return true;
}

}  // namespace d2wfp
