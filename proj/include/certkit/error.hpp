#pragma once

#include <stdexcept>
#include <string>

namespace certkit {

enum class ErrorCode {
    InvalidArgument,
    Parse,
    DimensionMismatch,
    NonFinite,
    Io,
    Domain,
    NonMonotone,
    NotCentered,
};

const char* error_code_name(ErrorCode code);

// All toolkit failures surface as this exception; the C API maps `code()` onto
// its status enum.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace certkit
