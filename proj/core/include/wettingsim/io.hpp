#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace wettingsim::io {

/// Shortest-form-independent decimal rendering with 17 significant digits.
/// The output parses back to the identical double.
std::string format_double(double value);

/// Strict parse of a full token as a double; throws MalformedFile on junk.
double parse_double(std::string_view token);
std::int64_t parse_int(std::string_view token);
std::uint64_t parse_u64(std::string_view token);

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state = 0xcbf29ce484222325ULL);
std::string to_hex(std::uint64_t value);

/// Writes to `<path>.tmp` and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

std::vector<std::string_view> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

}  // namespace wettingsim::io
