#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace smrm {

enum class ErrorCode {
    dimension_mismatch,
    not_positive_definite,
    invalid_argument,
    non_finite,
    fully_missing_column,
    missing_predictor,
    parse_error,
    io_error,
    unbounded_problem,
    objective_increase,
    split_unsatisfiable,
    degenerate_fit,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Structured error carried by every failure in the library.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace smrm
