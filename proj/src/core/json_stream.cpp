#include "designloop/json_stream.hpp"

#include "designloop/error.hpp"

namespace designloop::json {

namespace {

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

bool is_number_char(char c) {
    return (c >= '0' && c <= '9') || c == '-' || c == '+' || c == '.' || c == 'e' || c == 'E';
}

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

// -?(0|[1-9][0-9]*)(\.[0-9]+)?([eE][+-]?[0-9]+)?
bool valid_number(std::string_view s) {
    std::size_t i = 0;
    auto digits = [&] {
        const std::size_t start = i;
        while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
        return i - start;
    };
    if (i < s.size() && s[i] == '-') ++i;
    if (i >= s.size()) return false;
    if (s[i] == '0') {
        ++i;
    } else if (digits() == 0) {
        return false;
    }
    if (i < s.size() && s[i] == '.') {
        ++i;
        if (digits() == 0) return false;
    }
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        ++i;
        if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
        if (digits() == 0) return false;
    }
    return i == s.size();
}

constexpr std::string_view kTrue = "true";
constexpr std::string_view kFalse = "false";
constexpr std::string_view kNull = "null";

} // namespace

void StreamTokenizer::feed(std::string_view chunk) {
    for (char c : chunk) {
        step(c);
        ++offset_;
    }
    if (!string_is_key_ && (state_ == State::InString || state_ == State::InEscape ||
                            state_ == State::InUnicode)) {
        flush_string();
    }
}

bool StreamTokenizer::in_string() const noexcept {
    return state_ == State::InString || state_ == State::InEscape || state_ == State::InUnicode;
}

void StreamTokenizer::fail(const std::string& what) const { throw ParseError(what, offset_); }

void StreamTokenizer::append_code_point(std::uint32_t cp) {
    if (cp < 0x80) {
        string_buf_ += static_cast<char>(cp);
    } else if (cp < 0x800) {
        string_buf_ += static_cast<char>(0xC0 | (cp >> 6));
        string_buf_ += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        string_buf_ += static_cast<char>(0xE0 | (cp >> 12));
        string_buf_ += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        string_buf_ += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        string_buf_ += static_cast<char>(0xF0 | (cp >> 18));
        string_buf_ += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        string_buf_ += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        string_buf_ += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

void StreamTokenizer::flush_string() {
    if (string_buf_.empty()) return;
    handler_.string_chunk(string_buf_);
    string_buf_.clear();
}

void StreamTokenizer::after_value() {
    state_ = stack_.empty() ? State::Done : State::ExpectCommaOrEnd;
}

void StreamTokenizer::finish_number() {
    if (!valid_number(token_buf_)) fail("malformed number '" + token_buf_ + "'");
    handler_.scalar(ScalarKind::Number, token_buf_, token_start_);
    token_buf_.clear();
    after_value();
}

void StreamTokenizer::start_value(char c) {
    switch (c) {
    case '{':
        stack_.push_back(Container::Object);
        handler_.begin_object(offset_);
        state_ = State::ExpectKeyOrEnd;
        return;
    case '[':
        stack_.push_back(Container::Array);
        handler_.begin_array(offset_);
        state_ = State::ExpectValueOrEnd;
        return;
    case '"':
        string_is_key_ = false;
        string_buf_.clear();
        handler_.begin_string(offset_);
        state_ = State::InString;
        return;
    case 't':
    case 'f':
    case 'n':
        token_buf_.assign(1, c);
        token_start_ = offset_;
        state_ = State::InLiteral;
        return;
    default:
        if (c == '-' || (c >= '0' && c <= '9')) {
            token_buf_.assign(1, c);
            token_start_ = offset_;
            state_ = State::InNumber;
            return;
        }
        fail(std::string("unexpected character '") + c + "'");
    }
}

void StreamTokenizer::step(char c) {
    switch (state_) {
    case State::InString:
        if (c == '"') {
            if (pending_high_surrogate_) {
                append_code_point(0xFFFD);
                pending_high_surrogate_ = 0;
            }
            if (string_is_key_) {
                handler_.key(string_buf_, offset_);
                string_buf_.clear();
                state_ = State::ExpectColon;
            } else {
                flush_string();
                handler_.end_string(offset_);
                after_value();
            }
        } else if (c == '\\') {
            state_ = State::InEscape;
        } else if (static_cast<unsigned char>(c) < 0x20) {
            fail("control character in string");
        } else {
            if (pending_high_surrogate_) {
                append_code_point(0xFFFD);
                pending_high_surrogate_ = 0;
            }
            string_buf_ += c;
        }
        return;

    case State::InEscape: {
        if (c == 'u') {
            unicode_acc_ = 0;
            unicode_digits_ = 0;
            state_ = State::InUnicode;
            return;
        }
        char decoded = 0;
        switch (c) {
        case '"': decoded = '"'; break;
        case '\\': decoded = '\\'; break;
        case '/': decoded = '/'; break;
        case 'b': decoded = '\b'; break;
        case 'f': decoded = '\f'; break;
        case 'n': decoded = '\n'; break;
        case 'r': decoded = '\r'; break;
        case 't': decoded = '\t'; break;
        default: fail(std::string("invalid escape '\\") + c + "'");
        }
        if (pending_high_surrogate_) {
            append_code_point(0xFFFD);
            pending_high_surrogate_ = 0;
        }
        string_buf_ += decoded;
        state_ = State::InString;
        return;
    }

    case State::InUnicode: {
        const int v = hex_value(c);
        if (v < 0) fail("invalid unicode escape");
        unicode_acc_ = (unicode_acc_ << 4) | static_cast<std::uint32_t>(v);
        if (++unicode_digits_ < 4) return;
        const std::uint32_t cp = unicode_acc_;
        if (cp >= 0xD800 && cp <= 0xDBFF) {
            if (pending_high_surrogate_) append_code_point(0xFFFD);
            pending_high_surrogate_ = cp;
        } else if (cp >= 0xDC00 && cp <= 0xDFFF) {
            if (pending_high_surrogate_) {
                append_code_point(0x10000 + ((pending_high_surrogate_ - 0xD800) << 10) + (cp - 0xDC00));
                pending_high_surrogate_ = 0;
            } else {
                append_code_point(0xFFFD);
            }
        } else {
            if (pending_high_surrogate_) {
                append_code_point(0xFFFD);
                pending_high_surrogate_ = 0;
            }
            append_code_point(cp);
        }
        state_ = State::InString;
        return;
    }

    case State::InLiteral: {
        token_buf_ += c;
        for (std::string_view lit : {kTrue, kFalse, kNull}) {
            if (lit.substr(0, token_buf_.size()) != token_buf_) continue;
            if (lit.size() == token_buf_.size()) {
                const ScalarKind kind = lit == kTrue    ? ScalarKind::True
                                        : lit == kFalse ? ScalarKind::False
                                                        : ScalarKind::Null;
                handler_.scalar(kind, lit, token_start_);
                token_buf_.clear();
                after_value();
            }
            return;
        }
        fail("invalid literal '" + token_buf_ + "'");
    }

    case State::InNumber:
        if (is_number_char(c)) {
            token_buf_ += c;
            return;
        }
        finish_number();
        step(c);
        return;

    case State::ExpectValue:
        if (is_ws(c)) return;
        start_value(c);
        return;

    case State::ExpectValueOrEnd:
        if (is_ws(c)) return;
        if (c == ']') {
            stack_.pop_back();
            handler_.end_array(offset_);
            after_value();
            return;
        }
        start_value(c);
        return;

    case State::ExpectKeyOrEnd:
    case State::ExpectKey:
        if (is_ws(c)) return;
        if (c == '"') {
            string_is_key_ = true;
            string_buf_.clear();
            state_ = State::InString;
            return;
        }
        if (c == '}' && state_ == State::ExpectKeyOrEnd) {
            stack_.pop_back();
            handler_.end_object(offset_);
            after_value();
            return;
        }
        fail("expected object key");

    case State::ExpectColon:
        if (is_ws(c)) return;
        if (c != ':') fail("expected ':'");
        state_ = State::ExpectValue;
        return;

    case State::ExpectCommaOrEnd:
        if (is_ws(c)) return;
        if (c == ',') {
            state_ = stack_.back() == Container::Object ? State::ExpectKey : State::ExpectValue;
            return;
        }
        if (c == '}' && stack_.back() == Container::Object) {
            stack_.pop_back();
            handler_.end_object(offset_);
            after_value();
            return;
        }
        if (c == ']' && stack_.back() == Container::Array) {
            stack_.pop_back();
            handler_.end_array(offset_);
            after_value();
            return;
        }
        fail("expected ',' or closing bracket");

    case State::Done:
        if (is_ws(c)) return;
        fail("trailing characters after document");
    }
}

} // namespace designloop::json
