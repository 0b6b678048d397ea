#pragma once

// Quadrature, bracketed root finding, 1-D maximization and the log-space
// Gaussian integrals shared by the solvers.

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace qmem::numeric {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

using ScalarFn = std::function<double(double)>;

struct QuadratureOptions {
    double rel_tol = 1e-13;
    /// Longest sub-interval handed to the adaptive rule in one piece.
    double max_chunk = kInf;
    unsigned max_depth = 12;
};

/// Adaptive Gauss-Kronrod over [a, b]. `b` may be +inf. The interval is cut at
/// every breakpoint inside (a, b) and into pieces no longer than max_chunk so
/// that narrow features are never stepped over.
double integrate(const ScalarFn& f, double a, double b,
                 std::span<const double> breakpoints = {},
                 const QuadratureOptions& opts = {});

struct RootOptions {
    double x_tol = 1e-13;
    double f_tol = 0.0;
    int max_iter = 200;
};

/// Bracketed root of f on [lo, hi] (f(lo), f(hi) of opposite sign or zero).
/// Illinois false-position steps, falling back to bisection whenever the
/// bracket fails to halve.
double find_root(const ScalarFn& f, double lo, double hi, double f_lo, double f_hi,
                 const RootOptions& opts = {});

inline double find_root(const ScalarFn& f, double lo, double hi, const RootOptions& opts = {}) {
    return find_root(f, lo, hi, f(lo), f(hi), opts);
}

struct Bracket {
    double lo;
    double hi;
    double f_lo;
    double f_hi;
};

/// Scans lo, lo+step, ... up to hi for the first pair with f(left) > 0 and
/// f(right) <= 0.
std::optional<Bracket> first_downward_crossing(const ScalarFn& f, double lo, double hi,
                                               double step);

/// Golden-section search for the maximizer of a unimodal f on [lo, hi].
double golden_section_max(const ScalarFn& f, double lo, double hi, double x_tol);

/// erfc(x) * exp(x^2) for x >= 0, finite for large x.
double erfcx(double x);

/// log(erf(hi) - erf(lo)) for lo < hi; hi may be +inf, lo may be -inf.
double log_erf_diff(double lo, double hi);

/// log of the integral over [lo, hi] of exp(p*s - q*(s - c)^2), q > 0.
/// Evaluated without forming exp(p^2/4q), so arguments in the thousands are safe.
double log_gaussian_integral(double p, double q, double c, double lo, double hi);

/// log(exp(x) + exp(y)).
double log_add_exp(double x, double y);

std::vector<double> linspace(double lo, double hi, std::size_t n);
std::vector<double> logspace(double lo, double hi, std::size_t n);

}  // namespace qmem::numeric
