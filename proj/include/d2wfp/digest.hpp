#pragma once

#include <filesystem>
#include <string>

#include "d2wfp/bytes.hpp"

namespace d2wfp {

/// Lowercase hex SHA-256 of a byte buffer.
std::string sha256_hex(ByteView data);

/// Streams the file through SHA-256. Directories are hashed as the digest of
/// their sorted "relative-path NUL file-digest LF" listing.
std::string sha256_path(const std::filesystem::path& path);

std::uint64_t path_size(const std::filesystem::path& path);

}  // namespace d2wfp
