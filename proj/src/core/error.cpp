#include "designloop/error.hpp"

namespace designloop {

std::string_view error_code_name(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::NotFound: return "not-found";
    case ErrorCode::Conflict: return "conflict";
    case ErrorCode::InvalidState: return "invalid-state";
    case ErrorCode::Parse: return "parse-error";
    case ErrorCode::Storage: return "storage-error";
    case ErrorCode::Corrupt: return "corrupt";
    case ErrorCode::Provider: return "provider-error";
    case ErrorCode::Cancelled: return "cancelled";
    }
    return "unknown";
}

} // namespace designloop
