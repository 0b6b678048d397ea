#pragma once

#include <stdexcept>
#include <string>

namespace qmem {

/// Argument outside the documented domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Stage-1 charging never reaches the threshold population inside the search window.
class NoThreshold : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The zero-reflection coupling would exceed kappa_max and re-entry was not permitted.
class InfeasibleSchedule : public std::runtime_error {
public:
    InfeasibleSchedule(const std::string& what, double tau)
        : std::runtime_error(what), tau_(tau) {}
    double tau() const noexcept { return tau_; }

private:
    double tau_;
};

/// No downward crossing of the population rate (peak not reached).
class NoPeak : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SingularCoupling : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Adaptive integrator could not meet the requested tolerance.
class StepFailure : public std::runtime_error {
public:
    StepFailure(const std::string& what, double tau)
        : std::runtime_error(what), tau_(tau) {}
    double tau() const noexcept { return tau_; }

private:
    double tau_;
};

}  // namespace qmem
