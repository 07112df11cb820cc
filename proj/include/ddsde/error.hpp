#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ddsde {

/// Failure categories surfaced by the library. The CLI maps configuration
/// errors to exit code 2 and everything else to 1.
enum class ErrorCode {
    InvalidArgument,
    OddGridSize,
    GridMismatch,
    DomainTooSmall,
    SpectralTailTooLarge,
    NonMonotoneTimes,
    NegativeDensityInput,
    DriftViolatesH,
    MassLeak,
    CflViolation,
    DegenerateFit,
    ReferenceTooCoarse,
    ConfigError,
    IoError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::OddGridSize: return "OddGridSize";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::DomainTooSmall: return "DomainTooSmall";
    case ErrorCode::SpectralTailTooLarge: return "SpectralTailTooLarge";
    case ErrorCode::NonMonotoneTimes: return "NonMonotoneTimes";
    case ErrorCode::NegativeDensityInput: return "NegativeDensityInput";
    case ErrorCode::DriftViolatesH: return "DriftViolatesH";
    case ErrorCode::MassLeak: return "MassLeak";
    case ErrorCode::CflViolation: return "CflViolation";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::ReferenceTooCoarse: return "ReferenceTooCoarse";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) throw Error(code, message);
}

} // namespace ddsde
