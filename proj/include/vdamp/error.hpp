#pragma once

#include <stdexcept>
#include <string>

namespace vdamp {

/// Input violates an operation's precondition (dimension mismatch, t < t0, ...).
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Query is well-formed but the given potential or damping cannot answer it
/// (no argmin description, kernel bound with K <= 1, ...).
class Unsupported : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class IntegrationFailure : public std::runtime_error {
public:
    enum class Kind { StepUnderflow, Divergence, StepBudget };

    IntegrationFailure(Kind kind, double t, const std::string& what)
        : std::runtime_error(what), kind_(kind), t_(t) {}

    Kind kind() const noexcept { return kind_; }
    double t() const noexcept { return t_; }

private:
    Kind kind_;
    double t_;
};

} // namespace vdamp
