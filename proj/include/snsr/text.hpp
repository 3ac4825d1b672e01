#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace snsr::text {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

double parse_double(std::string_view token, std::string_view context = {});
std::int64_t parse_int(std::string_view token, std::string_view context = {});
std::size_t parse_index(std::string_view token, std::string_view context = {});

std::string_view trim(std::string_view s);
/// Splits on runs of whitespace.
std::vector<std::string_view> split_ws(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

/// Strips a trailing '#' comment and surrounding whitespace.
std::string_view strip_comment(std::string_view line);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace snsr::text
