#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace designloop::json {

enum class ScalarKind { True, False, Null, Number };

// Receives tokens as soon as they are recognised. Offsets are absolute byte
// positions in the concatenated input. Handlers may throw ParseError to reject
// input that is syntactically valid but violates their schema.
class StreamHandler {
public:
    virtual ~StreamHandler() = default;

    virtual void begin_object(std::size_t /*offset*/) {}
    virtual void end_object(std::size_t /*offset*/) {}
    virtual void begin_array(std::size_t /*offset*/) {}
    virtual void end_array(std::size_t /*offset*/) {}
    virtual void key(std::string_view /*name*/, std::size_t /*offset*/) {}
    virtual void begin_string(std::size_t /*offset*/) {}
    // Decoded (unescaped) bytes; a string may arrive in many chunks.
    virtual void string_chunk(std::string_view /*decoded*/) {}
    virtual void end_string(std::size_t /*offset*/) {}
    virtual void scalar(ScalarKind /*kind*/, std::string_view /*text*/, std::size_t /*offset*/) {}
};

// Push-down JSON tokenizer that accepts input in arbitrary chunks. It never
// buffers more than the current token; string contents are forwarded to the
// handler at the end of every feed() call so partially received strings are
// visible immediately.
class StreamTokenizer {
public:
    explicit StreamTokenizer(StreamHandler& handler) : handler_(handler) {}

    // Throws ParseError when the chunk cannot extend any valid document.
    void feed(std::string_view chunk);

    // True once the top-level value has been closed.
    bool complete() const noexcept { return state_ == State::Done; }
    bool in_string() const noexcept;
    std::size_t offset() const noexcept { return offset_; }
    std::size_t depth() const noexcept { return stack_.size(); }

private:
    enum class State {
        ExpectValue,
        ExpectValueOrEnd,
        ExpectKeyOrEnd,
        ExpectKey,
        ExpectColon,
        ExpectCommaOrEnd,
        InString,
        InEscape,
        InUnicode,
        InLiteral,
        InNumber,
        Done,
    };
    enum class Container : std::uint8_t { Object, Array };

    void step(char c);
    void start_value(char c);
    void after_value();
    void finish_number();
    void flush_string();
    void append_code_point(std::uint32_t cp);
    [[noreturn]] void fail(const std::string& what) const;

    StreamHandler& handler_;
    State state_ = State::ExpectValue;
    std::vector<Container> stack_;
    std::size_t offset_ = 0;
    std::size_t token_start_ = 0; // first byte of the pending number or literal

    bool string_is_key_ = false;
    std::string string_buf_;
    std::uint32_t unicode_acc_ = 0;
    int unicode_digits_ = 0;
    std::uint32_t pending_high_surrogate_ = 0;
    std::string token_buf_;
};

} // namespace designloop::json
