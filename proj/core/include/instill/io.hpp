#pragma once

#include <filesystem>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace instill {

std::string read_file(const std::filesystem::path& path);

/// Writes `content` to a sibling temp file and renames it over `path`, so a
/// reader never observes a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Calls `fn(line, line_number)` for every non-blank line; line numbers are
/// 1-based and count blank lines too.
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::string_view, std::size_t)>& fn);

/// Lowercase hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

}  // namespace instill

namespace instill {

/// Derives an independent, reproducible seed for one named stage from the
/// run's root seed.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stage);

}  // namespace instill
