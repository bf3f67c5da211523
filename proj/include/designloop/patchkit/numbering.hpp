#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace designloop::patchkit {

struct NumberedLine {
    std::size_t number = 0; // 1-based
    std::string text;
    std::string rendered;   // "L0001 text"

    bool operator==(const NumberedLine&) const = default;
};

// Code as shown to the model: every line carries an "L####" prefix followed by
// a single space. Numbers are zero-padded to four digits and widen as needed.
struct NumberedCode {
    std::vector<NumberedLine> lines;
    bool trailing_newline = false;

    std::string rendered() const;
    std::string stripped() const;
};

std::string render_prefix(std::size_t number);
std::string render_line(std::size_t number, std::string_view text);

NumberedCode number_lines(std::string_view code);

struct PrefixedLine {
    std::optional<std::size_t> number; // absent when the line has no valid prefix
    std::string text;

    bool operator==(const PrefixedLine&) const = default;
};

// "L0012 foo" -> {12, "foo"}; "L12" -> {12, ""}; "foo" -> {absent, "foo"}.
// Only the first prefix is removed, so "L0001 L0002 x" -> {1, "L0002 x"}.
PrefixedLine parse_prefixed_line(std::string_view line);

// Inverse of NumberedCode::rendered().
std::string strip_prefixes(std::string_view rendered);

} // namespace designloop::patchkit
