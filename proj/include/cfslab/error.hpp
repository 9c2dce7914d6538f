#pragma once

#include <stdexcept>
#include <string>

namespace cfslab {

// Caller broke a documented precondition (non-selfadjoint input, empty measure, ...).
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// An iterative numerical routine gave up. `residual` is the last measured defect.
class NumericalFailure : public std::runtime_error {
public:
    NumericalFailure(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

// Malformed input file or configuration value.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An integral that does not converge for the requested parameters.
class DivergentIntegral : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Constraint targets that no measure in the search space can meet.
class InfeasibleProblem : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace cfslab
