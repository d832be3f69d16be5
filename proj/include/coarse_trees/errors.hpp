#pragma once

#include <stdexcept>
#include <string>

namespace coarse_trees {

/// Stable machine-readable failure categories. The CLI prints these names
/// verbatim so scripts can dispatch on them.
enum class ErrorCode {
    EmptyGraph,
    NonPositiveIndex,
    Disconnected,
    BadInput,
    NotReduced,
    BallTooLarge,
    Degenerate,
    ValenceOneInterior,
    SlopeTooLarge,
    NotTypeTwoTwo,
    ZeroSlope,
    DensityMismatch,
    MatchFailure,
    BoundedHeightWarning,
    OrientationNotPreserved,
    SingularMatrix,
    IllConditioned,
    DimensionMismatch,
    NotCoprime,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::EmptyGraph: return "EmptyGraph";
        case ErrorCode::NonPositiveIndex: return "NonPositiveIndex";
        case ErrorCode::Disconnected: return "Disconnected";
        case ErrorCode::BadInput: return "BadInput";
        case ErrorCode::NotReduced: return "NotReduced";
        case ErrorCode::BallTooLarge: return "BallTooLarge";
        case ErrorCode::Degenerate: return "Degenerate";
        case ErrorCode::ValenceOneInterior: return "ValenceOneInterior";
        case ErrorCode::SlopeTooLarge: return "SlopeTooLarge";
        case ErrorCode::NotTypeTwoTwo: return "NotTypeTwoTwo";
        case ErrorCode::ZeroSlope: return "ZeroSlope";
        case ErrorCode::DensityMismatch: return "DensityMismatch";
        case ErrorCode::MatchFailure: return "MatchFailure";
        case ErrorCode::BoundedHeightWarning: return "BoundedHeightWarning";
        case ErrorCode::OrientationNotPreserved: return "OrientationNotPreserved";
        case ErrorCode::SingularMatrix: return "SingularMatrix";
        case ErrorCode::IllConditioned: return "IllConditioned";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NotCoprime: return "NotCoprime";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + detail),
          code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

}  // namespace coarse_trees
