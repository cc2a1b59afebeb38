#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace plantbp::csv {

/// Six significant digits, "." decimal separator, independent of locale.
std::string format_number(double value);

/// Splits one line on commas. No quoting: none of the formats written here
/// contain commas inside fields.
std::vector<std::string> split(std::string_view line);

// Both throw parse_error(line, ...) on malformed input.
std::int64_t parse_int(std::string_view field, std::size_t line, std::string_view column);
double parse_double(std::string_view field, std::size_t line, std::string_view column);

std::string_view trim(std::string_view s);

}  // namespace plantbp::csv
