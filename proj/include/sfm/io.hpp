#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sfm::io {

/// Writes `content` to a sibling temp file and renames it over `path`.
void atomic_write(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

/// Strict parse of a whole field; returns false on trailing garbage or empty input.
bool parse_double(std::string_view text, double& out);
bool parse_int(std::string_view text, long long& out);

std::string_view trim(std::string_view text);
std::vector<std::string_view> split(std::string_view line, char sep);

/// Reads a plain numeric CSV (header row required); returns rows and header.
struct NumericTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};
NumericTable read_numeric_csv(const std::filesystem::path& path);

std::uint64_t fnv1a(std::span<const int> values);

}  // namespace sfm::io
