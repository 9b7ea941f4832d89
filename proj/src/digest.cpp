#include "d2wfp/digest.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <memory>
#include <vector>

#include "d2wfp/error.hpp"

namespace d2wfp {

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
      throw Error(ErrorCode::Invalid, "SHA-256 init failed");
  }
  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_.get(), data, n); }
  std::string hex() {
    std::array<std::uint8_t, EVP_MAX_MD_SIZE> md{};
    unsigned len = 0;
    EVP_DigestFinal_ex(ctx_.get(), md.data(), &len);
    return to_hex(ByteView(md.data(), len));
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

std::string hash_regular_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  Sha256 h;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  if (in.bad()) throw Error(ErrorCode::IoError, "read failed: " + path.string());
  return h.hex();
}

}  // namespace

std::string sha256_hex(ByteView data) {
  Sha256 h;
  h.update(data.data(), data.size());
  return h.hex();
}

std::string sha256_path(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::exists(path, ec)) throw Error(ErrorCode::IoError, "no such path " + path.string());
  if (!fs::is_directory(path, ec)) return hash_regular_file(path);

  std::vector<std::string> rels;
  for (auto it = fs::recursive_directory_iterator(path, ec); !ec && it != fs::end(it);
       it.increment(ec)) {
    if (it->is_regular_file()) rels.push_back(fs::relative(it->path(), path).generic_string());
  }
  if (ec) throw Error(ErrorCode::IoError, "cannot walk " + path.string());
  std::sort(rels.begin(), rels.end());
  Sha256 h;
  for (const auto& rel : rels) {
    const auto digest = hash_regular_file(path / rel);
    h.update(rel.data(), rel.size());
    h.update("\0", 1);
    h.update(digest.data(), digest.size());
    h.update("\n", 1);
  }
  return h.hex();
}

std::uint64_t path_size(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(path, ec)) {
    const auto n = fs::file_size(path, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot stat " + path.string());
    return n;
  }
  std::uint64_t total = 0;
  for (auto it = fs::recursive_directory_iterator(path, ec); !ec && it != fs::end(it);
       it.increment(ec)) {
    if (it->is_regular_file()) total += it->file_size();
  }
  return total;
}

}  // namespace d2wfp
