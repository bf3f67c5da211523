#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace designloop::text {

// Byte-level Levenshtein distance (unit costs).
std::size_t levenshtein(std::string_view a, std::string_view b);

// 1 - levenshtein(a, b) / max(|a|, |b|); two empty strings are identical.
double similarity(std::string_view a, std::string_view b);

// Strips trailing spaces, tabs and carriage returns.
std::string_view rstrip(std::string_view s) noexcept;

std::string to_lower_ascii(std::string_view s);

// Splits on '\n'. "" yields no lines; a trailing '\n' does not yield an extra
// empty line (callers that need byte-exact reconstruction track it separately).
std::vector<std::string> split_lines(std::string_view s, bool* trailing_newline = nullptr);

std::string join_lines(const std::vector<std::string>& lines, bool trailing_newline);

// Collapses line breaks into single spaces and trims the ends.
std::string single_line(std::string_view s);

} // namespace designloop::text
