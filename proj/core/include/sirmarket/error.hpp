#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sirmarket {

enum class ErrorCode {
    integration_failure,
    bracket_error,
    convergence_error,
    range_error,
    domain_error,
    consistency_error,
    price_floor,
    no_plateau,
    grid_too_coarse,
    boundary_extremum,
    invalid_parameter,
    config_syntax,
    unknown_key,
    io_failure,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Base class of every error the engine raises. The code lets callers
/// (notably the CLI exit-status mapping) triage without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

class IntegrationFailure : public Error {
public:
    IntegrationFailure(double time, const std::string& what)
        : Error(ErrorCode::integration_failure, what), time_(time) {}

    /// Time of the step whose stage produced a non-finite derivative.
    double time() const noexcept { return time_; }

private:
    double time_;
};

class ConvergenceFailure : public Error {
public:
    ConvergenceFailure(double best, const std::string& what)
        : Error(ErrorCode::convergence_error, what), best_(best) {}

    double best_iterate() const noexcept { return best_; }

private:
    double best_;
};

/// User-facing errors: configuration and parameter validation.
inline bool is_usage_error(ErrorCode code) noexcept {
    return code == ErrorCode::invalid_parameter || code == ErrorCode::config_syntax ||
           code == ErrorCode::unknown_key;
}

}  // namespace sirmarket
