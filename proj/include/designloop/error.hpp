#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace designloop {

enum class ErrorCode {
    InvalidArgument,
    NotFound,
    Conflict,
    InvalidState,
    Parse,
    Storage,
    Corrupt,
    Provider,
    Cancelled,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Syntax or schema error in a structured payload; offset is the byte position
// in the full (concatenated) input where parsing could not continue.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t offset)
        : Error(ErrorCode::Parse, message + " at byte " + std::to_string(offset)),
          offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

} // namespace designloop
