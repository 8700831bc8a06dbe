#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bioage::detail {

// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_csv_line(std::string_view line);

// Reads the next non-empty line, stripping a trailing '\r'. False at EOF.
bool read_line(std::istream& in, std::string& line);

std::string csv_escape(std::string_view field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

// Shortest text that parses back to the same double.
std::string format_double(double v);
std::optional<double> parse_double(std::string_view text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

std::string sha256_hex(std::string_view bytes);

std::string_view trim(std::string_view s);

}  // namespace bioage::detail
