#pragma once

#include <filesystem>
#include <string_view>

namespace duprg {

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
/// Either the complete file appears or nothing does.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

} // namespace duprg
