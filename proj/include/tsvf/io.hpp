#pragma once

#include <filesystem>
#include <string>

namespace tsvf::io {

/// Writes `contents` to a sibling temporary file and renames it into place,
/// so readers never observe a partially written output.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

/// Whole-file read. Throws DataError if the file cannot be opened.
std::string read_file(const std::filesystem::path& path);

}  // namespace tsvf::io
