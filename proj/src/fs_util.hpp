#pragma once

#include <filesystem>
#include <string>

namespace dmsrec {

std::string read_file(const std::filesystem::path& path);

// Writes through a temp file in the same directory and renames into place,
// so readers never observe a partial file.
void atomic_write_file(const std::filesystem::path& path, const std::string& content);

// Hex FNV-1a 64 of the file bytes. Lineage fingerprint, not a security hash.
std::string file_fingerprint(const std::filesystem::path& path);

std::string hash_hex(uint64_t h);

}  // namespace dmsrec
