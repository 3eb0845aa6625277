#pragma once

#include <filesystem>
#include <string>

namespace posegen {

// Lowercase hex digests.
std::string sha256_hex(const std::string& bytes);
// Git blob id: sha1 over "blob <size>\0" followed by the content.
std::string git_blob_sha1(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace posegen
