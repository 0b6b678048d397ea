#include "qmem/closed_form.hpp"

#include <cmath>
#include <numbers>

#include "qmem/errors.hpp"
#include "qmem/numeric.hpp"

namespace qmem {

namespace {

using numeric::kInf;

// expm1(a t) / a, continuous through a = 0.
double expm1_ratio(double a, double t) {
    return a == 0.0 ? t : std::expm1(a * t) / a;
}

void check_kappa_i(double kappa_i) {
    if (!(kappa_i >= 0.0 && kappa_i < 1.0)) throw DomainError("kappa_i must lie in [0, 1)");
}

}  // namespace

ExpConstants exp_constants(double r, double kappa_i) {
    if (!(r > 0.0 && r <= 1.0)) throw DomainError("r must lie in (0, 1]");
    check_kappa_i(kappa_i);
    ExpConstants c{r, kappa_i, 0.0, 0.0, 0.0};
    const double d = 1.0 + kappa_i - r;
    // log(2 / (2 - d)) * 2 / d, with its series near d = 0.
    c.tau_c = std::abs(d) < 1e-6 ? 1.0 + d / 4.0 + d * d / 12.0 : -2.0 * std::log1p(-0.5 * d) / d;
    const double delta = r - kappa_i;
    if (delta == 0.0) {
        c.A1 = kInf;
        c.A2 = kInf;
    } else {
        c.A1 = r * std::exp(-delta * c.tau_c) * (1.0 + 1.0 / delta);
        c.A2 = r / delta;
    }
    return c;
}

double exp_population(const ExpConstants& c, double tau) {
    if (tau < 0.0) throw DomainError("tau must be non-negative");
    if (tau < c.tau_c) {
        const double d = 1.0 + c.kappa_i - c.r;
        const double g = -expm1_ratio(-0.5 * d, tau);
        return c.r * std::exp(-c.r * tau) * g * g;
    }
    const double x = tau - c.tau_c;
    const double delta = c.kappa_i - c.r;
    return c.r * std::exp(-c.r * c.tau_c - c.kappa_i * x) * (1.0 + expm1_ratio(delta, x));
}

double exp_population(double r, double kappa_i, double tau) {
    return exp_population(exp_constants(r, kappa_i), tau);
}

double exp_coupling(const ExpConstants& c, double tau) {
    if (tau < c.tau_c) throw DomainError("coupling formula applies from tau_c on");
    const double x = tau - c.tau_c;
    const double delta = c.kappa_i - c.r;
    const double den = 1.0 + expm1_ratio(delta, x);
    if (!(den > 0.0) || !std::isfinite(den))
        throw SingularCoupling("coupling denominator is not positive");
    return std::exp(delta * x) / den;
}

double exp_coupling(double r, double kappa_i, double tau) {
    return exp_coupling(exp_constants(r, kappa_i), tau);
}

PeakResult exp_report(const ExpConstants& c) {
    if (c.kappa_i == 0.0) return {kInf, c.A1};
    if (c.kappa_i >= c.r) throw DomainError("peak formula requires kappa_i < r");
    const double delta = c.r - c.kappa_i;
    // log(r A2 / (kappa_i A1)) with A1, A2 expanded.
    const double log_ratio = std::log(c.r / c.kappa_i) + delta * c.tau_c - std::log1p(delta);
    const double tau_max = log_ratio / delta;
    const double log_f =
        -(c.r / delta) * log_ratio + std::log(c.A2) + std::log(c.r / c.kappa_i - 1.0);
    return {tau_max, std::exp(log_f)};
}

PeakResult exp_report(double r, double kappa_i) {
    return exp_report(exp_constants(r, kappa_i));
}

namespace {

// log of the stage-1 integral of exp(a s - b (s - tau0)^2) over [0, tau].
double log_stage1_integral(const GaussConstants& c, double tau) {
    if (tau <= 0.0) return -kInf;
    return numeric::log_gaussian_integral(c.a, c.b, c.tau0, 0.0, tau);
}

// log(population / peak_rate) in stage 2, times exp(kappa_i tau).
double log_stage2_scaled(const GaussConstants& c, double tau) {
    const double held = c.kappa_i * c.tau_c - 2.0 * c.b * (c.tau_c - c.tau0) * (c.tau_c - c.tau0);
    if (!(tau > c.tau_c)) return held;
    const double j =
        numeric::log_gaussian_integral(c.kappa_i, 2.0 * c.b, c.tau0, c.tau_c, tau);
    return numeric::log_add_exp(held, j);
}

double gauss_horizon(const GaussConstants& c) { return c.tau0 + 10.0 * c.sigma; }

}  // namespace

GaussConstants gauss_constants(double sigma, double n, double kappa_i) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("sigma must be positive");
    if (!(n >= 3.0)) throw DomainError("lead n must be at least 3");
    check_kappa_i(kappa_i);
    GaussConstants c{};
    c.sigma = sigma;
    c.n = n;
    c.kappa_i = kappa_i;
    c.peak_rate = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
    c.a = 0.5 * (1.0 + kappa_i);
    c.b = 1.0 / (4.0 * sigma * sigma);
    c.tau0 = n * sigma;

    // Positive while beta^2 < r_in; log-space avoids exp(a tau) overflow.
    auto h = [&](double tau) {
        return c.a * tau - c.b * (tau - c.tau0) * (tau - c.tau0) - log_stage1_integral(c, tau);
    };
    const double step = 0.05 * std::min(1.0, sigma);
    const auto br = numeric::first_downward_crossing(h, step, gauss_horizon(c), step);
    if (!br) throw NoThreshold("gaussian input never reaches the threshold population");
    numeric::RootOptions o;
    o.x_tol = 1e-14 * std::max(1.0, br->hi);
    c.tau_c = numeric::find_root(h, br->lo, br->hi, br->f_lo, br->f_hi, o);
    return c;
}

double gauss_population(const GaussConstants& c, double tau) {
    if (tau < 0.0) throw DomainError("tau must be non-negative");
    if (tau == 0.0) return 0.0;
    if (tau < c.tau_c)
        return c.peak_rate * std::exp(2.0 * (log_stage1_integral(c, tau) - c.a * tau));
    return c.peak_rate * std::exp(log_stage2_scaled(c, tau) - c.kappa_i * tau);
}

double gauss_population(double sigma, double n, double kappa_i, double tau) {
    return gauss_population(gauss_constants(sigma, n, kappa_i), tau);
}

double gauss_coupling(const GaussConstants& c, double tau) {
    if (tau < c.tau_c) throw DomainError("coupling formula applies from tau_c on");
    const double log_rate = -2.0 * c.b * (tau - c.tau0) * (tau - c.tau0);
    return std::exp(log_rate + c.kappa_i * tau - log_stage2_scaled(c, tau));
}

PeakResult gauss_report(const GaussConstants& c) {
    if (c.kappa_i == 0.0) {
        const double held = -2.0 * c.b * (c.tau_c - c.tau0) * (c.tau_c - c.tau0);
        const double tail = numeric::log_gaussian_integral(0.0, 2.0 * c.b, c.tau0, c.tau_c, kInf);
        return {kInf, c.peak_rate * std::exp(numeric::log_add_exp(held, tail))};
    }
    // log(r_in / (kappa_i beta^2)); positive while the population grows.
    const double log_ki = std::log(c.kappa_i);
    auto h = [&](double tau) {
        return c.kappa_i * tau - 2.0 * c.b * (tau - c.tau0) * (tau - c.tau0) - log_ki -
               log_stage2_scaled(c, tau);
    };
    const double step = 0.05 * std::min(1.0, c.sigma);
    auto br = numeric::first_downward_crossing(h, c.tau_c, gauss_horizon(c), step);
    if (!br) {
        br = numeric::first_downward_crossing(h, gauss_horizon(c),
                                              2.0 * gauss_horizon(c), step);
        if (!br) throw NoPeak("gaussian population still rising at the end of the window");
    }
    numeric::RootOptions o;
    o.x_tol = 1e-13 * std::max(1.0, br->hi);
    const double tau_max = numeric::find_root(h, br->lo, br->hi, br->f_lo, br->f_hi, o);
    return {tau_max, gauss_population(c, tau_max)};
}

PeakResult gauss_report(double sigma, double n, double kappa_i) {
    return gauss_report(gauss_constants(sigma, n, kappa_i));
}

}  // namespace qmem
