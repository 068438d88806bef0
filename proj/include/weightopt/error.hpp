#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace weightopt {

enum class ErrorCode {
    InvalidSpec,
    LengthMismatch,
    ZeroWeightIntegral,
    SingularSystem,
    NotAdmissible,
    NoPositivePart,
    ConstantField,
    TooLarge,
    IterationLimit,
    NonUniformGrid,
    MeasureMismatch,
    NotAdmissibleClass,
    IndivisibleStripes,
    NegativeInitial,
    UnstableStep,
    ParseError,
    ValidationError,
    IoError,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ZeroWeightIntegral: return "ZeroWeightIntegral";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NotAdmissible: return "NotAdmissible";
    case ErrorCode::NoPositivePart: return "NoPositivePart";
    case ErrorCode::ConstantField: return "ConstantField";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::IterationLimit: return "IterationLimit";
    case ErrorCode::NonUniformGrid: return "NonUniformGrid";
    case ErrorCode::MeasureMismatch: return "MeasureMismatch";
    case ErrorCode::NotAdmissibleClass: return "NotAdmissibleClass";
    case ErrorCode::IndivisibleStripes: return "IndivisibleStripes";
    case ErrorCode::NegativeInitial: return "NegativeInitial";
    case ErrorCode::UnstableStep: return "UnstableStep";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// CLI exit codes, one per error family.
inline int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::IoError:
        return 2;
    case ErrorCode::InvalidSpec:
    case ErrorCode::LengthMismatch:
    case ErrorCode::ValidationError:
    case ErrorCode::NotAdmissible:
    case ErrorCode::NoPositivePart:
    case ErrorCode::NotAdmissibleClass:
    case ErrorCode::NonUniformGrid:
    case ErrorCode::MeasureMismatch:
    case ErrorCode::IndivisibleStripes:
    case ErrorCode::NegativeInitial:
    case ErrorCode::ZeroWeightIntegral:
    case ErrorCode::ConstantField:
    case ErrorCode::TooLarge:
        return 3;
    case ErrorCode::SingularSystem:
    case ErrorCode::UnstableStep:
        return 4;
    case ErrorCode::IterationLimit:
        return 5;
    }
    return 4;
}

} // namespace weightopt
