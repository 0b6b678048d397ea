#pragma once

// Analytic evaluators for exponential and Gaussian inputs. Used as oracles for
// the generic solver and as the fast path of the parameter sweep.

namespace qmem {

struct PeakResult {
    double tau_max;  ///< +inf when kappa_i = 0
    double fidelity;
};

/// Stage-2 population of the exponential input is A1 exp(-kappa_i tau) - A2 exp(-r tau).
struct ExpConstants {
    double r;
    double kappa_i;
    double A1;  ///< +inf at r = kappa_i, where only the stable forms are meaningful
    double A2;  ///< 1 / (1 - kappa_i / r); +inf at r = kappa_i
    double tau_c;
};

/// Domain: 0 < r <= 1 and 0 <= kappa_i < 1; DomainError otherwise.
ExpConstants exp_constants(double r, double kappa_i);

double exp_population(const ExpConstants& c, double tau);
double exp_population(double r, double kappa_i, double tau);

/// Zero-reflection coupling for tau >= tau_c.
double exp_coupling(const ExpConstants& c, double tau);
double exp_coupling(double r, double kappa_i, double tau);

/// DomainError when kappa_i >= r; (inf, A1) when kappa_i = 0.
PeakResult exp_report(const ExpConstants& c);
PeakResult exp_report(double r, double kappa_i);

struct GaussConstants {
    double sigma;
    double n;
    double kappa_i;
    double peak_rate;  ///< 1 / (sigma sqrt(2 pi))
    double a;          ///< (1 + kappa_i) / 2
    double b;          ///< 1 / (4 sigma^2)
    double tau0;       ///< n sigma
    double tau_c;
};

/// Domain: sigma > 0, n >= 3, 0 <= kappa_i < 1. Throws NoThreshold when the
/// threshold is not reached before tau0 + 10 sigma.
GaussConstants gauss_constants(double sigma, double n, double kappa_i);

double gauss_population(const GaussConstants& c, double tau);
double gauss_population(double sigma, double n, double kappa_i, double tau);

double gauss_coupling(const GaussConstants& c, double tau);

/// Throws NoPeak when the population is still rising at the end of the window.
PeakResult gauss_report(const GaussConstants& c);
PeakResult gauss_report(double sigma, double n, double kappa_i);

}  // namespace qmem
