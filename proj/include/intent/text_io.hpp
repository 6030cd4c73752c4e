#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace intent::text {

// Throws DataError when the file cannot be opened.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

std::vector<std::string> split(std::string_view s, char delim);
std::vector<std::string> split_lines(std::string_view text);
std::string_view trim(std::string_view s);

// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);
// Strict parsers; throw InputError naming `what` on failure.
double parse_double(std::string_view s, std::string_view what = "number");
long long parse_int(std::string_view s, std::string_view what = "integer");

}  // namespace intent::text
