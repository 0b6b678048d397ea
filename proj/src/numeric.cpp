#include "qmem/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qmem/errors.hpp"

namespace qmem::numeric {

namespace {

using Kronrod = boost::math::quadrature::gauss_kronrod<double, 31>;

// Boost's recursion compares an unscaled error estimate with a scaled
// tolerance, so finite pieces are mapped onto [-1, 1] first.
double integrate_piece(const ScalarFn& f, double a, double b, const QuadratureOptions& opts) {
    double err = 0.0;
    if (std::isinf(b)) return Kronrod::integrate(f, a, b, opts.max_depth, opts.rel_tol, &err);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    auto g = [&](double x) { return half * f(mid + half * x); };
    return Kronrod::integrate(g, -1.0, 1.0, opts.max_depth, opts.rel_tol, &err);
}

}  // namespace

double integrate(const ScalarFn& f, double a, double b, std::span<const double> breakpoints,
                 const QuadratureOptions& opts) {
    if (!(b > a)) {
        if (a == b) return 0.0;
        return -integrate(f, b, a, breakpoints, opts);
    }
    std::vector<double> cuts{a};
    for (double x : breakpoints) {
        if (x > a && x < b) cuts.push_back(x);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    const bool infinite = std::isinf(b);
    double finite_end = b;
    if (infinite) {
        // Cover the last breakpoint plus one chunk with finite pieces; the
        // rest goes to the mapped semi-infinite rule.
        finite_end = cuts.back() + (std::isfinite(opts.max_chunk) ? opts.max_chunk : 1.0);
    }
    cuts.push_back(finite_end);

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double lo = cuts[i];
        const double hi = cuts[i + 1];
        const double len = hi - lo;
        std::size_t pieces = 1;
        if (std::isfinite(opts.max_chunk) && len > opts.max_chunk) {
            pieces = static_cast<std::size_t>(std::ceil(len / opts.max_chunk));
        }
        for (std::size_t k = 0; k < pieces; ++k) {
            const double x0 = lo + len * static_cast<double>(k) / static_cast<double>(pieces);
            const double x1 = (k + 1 == pieces)
                                  ? hi
                                  : lo + len * static_cast<double>(k + 1) / static_cast<double>(pieces);
            total += integrate_piece(f, x0, x1, opts);
        }
    }
    if (infinite) total += integrate_piece(f, finite_end, kInf, opts);
    return total;
}

double find_root(const ScalarFn& f, double lo, double hi, double f_lo, double f_hi,
                 const RootOptions& opts) {
    if (f_lo == 0.0) return lo;
    if (f_hi == 0.0) return hi;
    if ((f_lo > 0.0) == (f_hi > 0.0)) {
        throw DomainError("find_root: interval does not bracket a sign change");
    }
    int side = 0;
    double width = hi - lo;
    for (int it = 0; it < opts.max_iter; ++it) {
        double x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        // Every third iteration, force bisection unless the bracket has been
        // shrinking quickly enough on its own.
        if (!(x > lo && x < hi) || (it % 3 == 2 && (hi - lo) > 0.5 * width)) {
            x = 0.5 * (lo + hi);
        }
        if (it % 3 == 2) width = hi - lo;
        const double fx = f(x);
        if (fx == 0.0 || std::abs(fx) <= opts.f_tol) return x;
        if ((fx > 0.0) == (f_lo > 0.0)) {
            lo = x;
            f_lo = fx;
            if (side == -1) f_hi *= 0.5;
            side = -1;
        } else {
            hi = x;
            f_hi = fx;
            if (side == 1) f_lo *= 0.5;
            side = 1;
        }
        if (hi - lo <= opts.x_tol * std::max(1.0, std::abs(lo))) break;
    }
    return std::abs(f_lo) < std::abs(f_hi) ? lo : hi;
}

std::optional<Bracket> first_downward_crossing(const ScalarFn& f, double lo, double hi,
                                               double step) {
    double x0 = lo;
    double f0 = f(x0);
    while (x0 < hi) {
        const double x1 = std::min(hi, x0 + step);
        const double f1 = f(x1);
        if (f0 > 0.0 && f1 <= 0.0) return Bracket{x0, x1, f0, f1};
        x0 = x1;
        f0 = f1;
    }
    return std::nullopt;
}

double golden_section_max(const ScalarFn& f, double lo, double hi, double x_tol) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo;
    double b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > x_tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    // Compare against the end points so that a monotone f returns the edge.
    const double mid = 0.5 * (a + b);
    double best = mid;
    double f_best = f(mid);
    for (double x : {lo, hi}) {
        const double fx = f(x);
        if (fx > f_best) {
            best = x;
            f_best = fx;
        }
    }
    return best;
}

double erfcx(double x) {
    if (x < 0.0) throw DomainError("erfcx: negative argument");
    if (std::isinf(x)) return 0.0;
    if (x < 25.0) return std::exp(x * x) * std::erfc(x);
    // Asymptotic series; terms shrink by (2k-1)/(2x^2) < 0.03.
    const double inv2x2 = 1.0 / (2.0 * x * x);
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k <= 10; ++k) {
        term *= -(2.0 * k - 1.0) * inv2x2;
        sum += term;
    }
    return sum * std::numbers::inv_sqrtpi / x;
}

double log_erf_diff(double lo, double hi) {
    if (!(hi > lo)) throw DomainError("log_erf_diff: empty interval");
    if (hi <= 0.0) return log_erf_diff(-hi, -lo);
    if (lo >= 0.0) {
        if (std::isfinite(hi) && hi - lo < 0.25) {
            // Short interval: integrate exp(lo^2 - u^2) directly.
            const double shift = lo * lo;
            auto g = [shift](double u) { return std::exp(shift - u * u); };
            const double v = boost::math::quadrature::gauss<double, 20>::integrate(g, lo, hi);
            return -shift + std::log(2.0 / std::sqrt(std::numbers::pi) * v);
        }
        const double tail_ratio = std::isinf(hi) ? 0.0 : std::exp((lo - hi) * (lo + hi)) * erfcx(hi);
        return -lo * lo + std::log(erfcx(lo) - tail_ratio);
    }
    // Straddles zero: no cancellation.
    return std::log(std::erf(hi) - std::erf(lo));
}

double log_gaussian_integral(double p, double q, double c, double lo, double hi) {
    if (!(q > 0.0)) throw DomainError("log_gaussian_integral: q must be positive");
    const double m = c + p / (2.0 * q);
    const double k = p * c + p * p / (4.0 * q);
    const double sq = std::sqrt(q);
    const double u_lo = std::isinf(lo) ? lo : sq * (lo - m);
    const double u_hi = std::isinf(hi) ? hi : sq * (hi - m);
    return k + 0.5 * std::log(std::numbers::pi / q) - std::numbers::ln2 + log_erf_diff(u_lo, u_hi);
}

double log_add_exp(double x, double y) {
    if (x == -kInf) return y;
    if (y == -kInf) return x;
    const double m = std::max(x, y);
    return m + std::log1p(std::exp(-std::abs(x - y)));
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = lo;
        return v;
    }
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    v.back() = hi;
    return v;
}

std::vector<double> logspace(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0 && hi > 0.0)) throw DomainError("logspace: bounds must be positive");
    auto v = linspace(std::log10(lo), std::log10(hi), n);
    for (double& x : v) x = std::pow(10.0, x);
    if (n > 0) {
        v.front() = lo;
        v.back() = hi;
    }
    return v;
}

}  // namespace qmem::numeric
