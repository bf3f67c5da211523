#include "designloop/patchkit/numbering.hpp"

#include "designloop/text.hpp"

namespace designloop::patchkit {

std::string render_prefix(std::size_t number) {
    std::string digits = std::to_string(number);
    if (digits.size() < 4) digits.insert(0, 4 - digits.size(), '0');
    return "L" + digits;
}

std::string render_line(std::size_t number, std::string_view text) {
    std::string out = render_prefix(number);
    out += ' ';
    out += text;
    return out;
}

NumberedCode number_lines(std::string_view code) {
    NumberedCode out;
    auto lines = text::split_lines(code, &out.trailing_newline);
    out.lines.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        NumberedLine line;
        line.number = i + 1;
        line.rendered = render_line(line.number, lines[i]);
        line.text = std::move(lines[i]);
        out.lines.push_back(std::move(line));
    }
    return out;
}

std::string NumberedCode::rendered() const {
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i) out += '\n';
        out += lines[i].rendered;
    }
    if (trailing_newline) out += '\n';
    return out;
}

std::string NumberedCode::stripped() const {
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i) out += '\n';
        out += lines[i].text;
    }
    if (trailing_newline) out += '\n';
    return out;
}

PrefixedLine parse_prefixed_line(std::string_view line) {
    constexpr std::size_t kMaxDigits = 9;
    if (line.size() < 2 || line[0] != 'L' || line[1] < '0' || line[1] > '9') {
        return {std::nullopt, std::string(line)};
    }
    std::size_t i = 1;
    std::size_t number = 0;
    while (i < line.size() && line[i] >= '0' && line[i] <= '9') {
        if (i > kMaxDigits) return {std::nullopt, std::string(line)};
        number = number * 10 + static_cast<std::size_t>(line[i] - '0');
        ++i;
    }
    if (i == line.size()) return {number, std::string()};
    if (line[i] != ' ') return {std::nullopt, std::string(line)};
    return {number, std::string(line.substr(i + 1))};
}

std::string strip_prefixes(std::string_view rendered) {
    bool trailing = false;
    auto lines = text::split_lines(rendered, &trailing);
    for (auto& line : lines) line = parse_prefixed_line(line).text;
    return text::join_lines(lines, trailing);
}

} // namespace designloop::patchkit
