// Flat-file helpers shared by the stages: CSV, number formatting, hashing.
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hexembed::io {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

using CsvRow = std::vector<std::string>;

std::string csv_escape(std::string_view field);
std::string csv_line(const CsvRow& fields);
CsvRow parse_csv_line(std::string_view line);

struct CsvTable {
    CsvRow header;
    std::vector<CsvRow> rows;

    /// Column position by name; throws DataError when absent.
    std::size_t column(std::string_view name) const;
};

/// Reads a CSV file with a header row; every row must match the header width.
CsvTable read_csv(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary file and renames it into place.
void write_file(const std::filesystem::path& path, std::string_view content);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace hexembed::io
