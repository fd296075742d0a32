#pragma once

#include <stdexcept>
#include <string>

namespace stratify {

enum class ErrorKind {
    MissingColumn,
    ParseError,
    MissingValue,
    EmptyFrame,
    InvalidSchema,
    KTooLarge,
    EmptyGroup,
    LengthMismatch,
    LabelOutOfRange,
    ZeroTotal,
    InvalidArgs,
    TooLarge,
    AllocationMismatch,
    Io,
    InvalidConfig,
};

const char* to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (CLI, Python)
// can branch on it without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace stratify
