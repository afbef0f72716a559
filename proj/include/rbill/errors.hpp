#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rbill {

enum class ErrorKind {
    InvalidConfig,
    DegenerateRadius,
    OverlappingDisks,
    HorizonUnbounded,
    NoIntersection,
    VPerpUnderflow,
    NearTangency,
    TangencySplitFailure,
    TailDivergence,
    QuadratureFailure,
    EmptySample,
    EdgeMismatch,
    UnequalBeta,
    WindowEmpty,
    TooShort,
};

inline std::string_view to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::DegenerateRadius: return "DegenerateRadius";
        case ErrorKind::OverlappingDisks: return "OverlappingDisks";
        case ErrorKind::HorizonUnbounded: return "HorizonUnbounded";
        case ErrorKind::NoIntersection: return "NoIntersection";
        case ErrorKind::VPerpUnderflow: return "VPerpUnderflow";
        case ErrorKind::NearTangency: return "NearTangency";
        case ErrorKind::TangencySplitFailure: return "TangencySplitFailure";
        case ErrorKind::TailDivergence: return "TailDivergence";
        case ErrorKind::QuadratureFailure: return "QuadratureFailure";
        case ErrorKind::EmptySample: return "EmptySample";
        case ErrorKind::EdgeMismatch: return "EdgeMismatch";
        case ErrorKind::UnequalBeta: return "UnequalBeta";
        case ErrorKind::WindowEmpty: return "WindowEmpty";
        case ErrorKind::TooShort: return "TooShort";
    }
    return "Unknown";
}

/// Every library failure is an Error carrying a machine-readable kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace rbill
