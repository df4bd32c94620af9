#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rampinn {

enum class ErrorKind {
    AllZeroSignal,
    LengthMismatch,
    ShapeMismatch,
    DegenerateBackground,
    NonPositiveReference,
    NonFiniteGradient,
    BadWindow,
    EmptyInput,
    InvalidArgument,
    Parse,
    Io,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the toolkit; callers branch on kind().
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::AllZeroSignal: return "AllZeroSignal";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::ShapeMismatch: return "ShapeMismatch";
        case ErrorKind::DegenerateBackground: return "DegenerateBackground";
        case ErrorKind::NonPositiveReference: return "NonPositiveReference";
        case ErrorKind::NonFiniteGradient: return "NonFiniteGradient";
        case ErrorKind::BadWindow: return "BadWindow";
        case ErrorKind::EmptyInput: return "EmptyInput";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::Parse: return "Parse";
        case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace rampinn
