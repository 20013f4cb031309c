#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sqcav {

/// Failure categories. The CLI maps each category to a distinct exit code.
enum class ErrorKind {
    InvalidDims,
    DimensionMismatch,
    Threshold,
    Truncation,
    InvalidConfig,
    InvalidState,
    DegenerateSteadyState,
    NonConvergence,
    StepSize,
    Positivity,
    Internal,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace sqcav
