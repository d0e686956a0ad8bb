#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace zerostat {

/// Shortest decimal that round-trips, locale independent.
std::string format_double(double x);

void write_file(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

/// Lower-case hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

}  // namespace zerostat
