#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tbsim {

enum class ErrorKind {
    InvalidGeometry,
    InvalidState,
    InvalidDistribution,
    InvalidArgument,
    NumericalError,
    CapacityError,
    UndefinedMoment,
    FitError,
    OutOfRange,
    DetectionError,
    NotReducible,
    ConfigError,
    IoError,
};

constexpr std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidGeometry: return "invalid-geometry";
        case ErrorKind::InvalidState: return "invalid-state";
        case ErrorKind::InvalidDistribution: return "invalid-distribution";
        case ErrorKind::InvalidArgument: return "invalid-argument";
        case ErrorKind::NumericalError: return "numerical-error";
        case ErrorKind::CapacityError: return "capacity-error";
        case ErrorKind::UndefinedMoment: return "undefined-moment";
        case ErrorKind::FitError: return "fit-error";
        case ErrorKind::OutOfRange: return "out-of-range";
        case ErrorKind::DetectionError: return "detection-error";
        case ErrorKind::NotReducible: return "not-reducible";
        case ErrorKind::ConfigError: return "config-error";
        case ErrorKind::IoError: return "io-error";
    }
    return "unknown";
}

// All library failures are reported through this type; `kind()` is stable
// and is what the CLI puts into its error JSON.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

}  // namespace tbsim
