#include "stratify/error.hpp"

namespace stratify {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::MissingColumn: return "MissingColumn";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::MissingValue: return "MissingValue";
        case ErrorKind::EmptyFrame: return "EmptyFrame";
        case ErrorKind::InvalidSchema: return "InvalidSchema";
        case ErrorKind::KTooLarge: return "KTooLarge";
        case ErrorKind::EmptyGroup: return "EmptyGroup";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
        case ErrorKind::ZeroTotal: return "ZeroTotal";
        case ErrorKind::InvalidArgs: return "InvalidArgs";
        case ErrorKind::TooLarge: return "TooLarge";
        case ErrorKind::AllocationMismatch: return "AllocationMismatch";
        case ErrorKind::Io: return "Io";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
    }
    return "Unknown";
}

}  // namespace stratify
