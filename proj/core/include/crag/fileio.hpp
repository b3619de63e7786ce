// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace crag {

/// Writes to a sibling temp file, then renames over `path`.
void write_file_atomically(const std::filesystem::path& path, std::string_view content);

/// Throws StorageError when the file is missing or unreadable.
std::string read_file(const std::filesystem::path& path);

}  // namespace crag
