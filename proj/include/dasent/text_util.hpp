#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace dasent {

// ASCII case folding; bytes >= 0x80 are left untouched.
std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);

// Trim, fold case and collapse internal whitespace runs to a single space.
std::string normalize_token(std::string_view s);

std::vector<std::string> split(std::string_view s, char delim);

// Minimal RFC 4180 field splitter (double-quoted fields, "" escapes).
std::vector<std::string> split_csv_line(std::string_view line);
std::string csv_escape(std::string_view field);

// Opens a file for reading or throws InputError naming the path.
std::ifstream open_input(const std::filesystem::path& path);

// Reads a one-token-per-line file; blank lines and '#' comments are skipped.
std::vector<std::string> read_token_list(std::istream& in);
std::vector<std::string> read_token_list(const std::filesystem::path& path);

// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

}  // namespace dasent
