#pragma once

#include <stdexcept>
#include <string>

namespace fdctmc {

enum class ErrorCode {
    validation,
    degenerate_model,
    target_unreachable,
    model_shape_violation,
    truncation_overflow,
    precision_exhausted,
    coefficient_overflow,
    root_isolation_precision,
    infinite_expected_cost,
    solver_failure,
    estimator_starved,
};

const char* code_name(ErrorCode c);

/// Process exit code for a failure class: 2 = validation, 3 = numeric.
int exit_code(ErrorCode c);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& msg)
        : std::runtime_error(std::string(code_name(code)) + ": " + msg), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& msg) {
    throw Error(code, msg);
}

}  // namespace fdctmc
