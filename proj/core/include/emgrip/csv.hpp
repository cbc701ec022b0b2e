#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace emgrip::csv {

// Formats with enough digits that strtod round-trips the exact double.
std::string format_double(double v);

// Shorter form for bulky data files; round-trips to better than 1e-9.
std::string format_double_compact(double v);

std::vector<std::string> split_fields(const std::string& line, char sep = ',');

// Throws ParseError naming the line number on malformed input.
double parse_double(const std::string& field, std::size_t line_no);
long parse_long(const std::string& field, std::size_t line_no);

// Reads a whole text file; ParseError if it cannot be opened.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

std::vector<std::string> split_lines(const std::string& text);

}  // namespace emgrip::csv
