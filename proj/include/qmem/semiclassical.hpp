#pragma once

// Coupling that nulls the output of a classically driven resonator, and its
// comparison with the quantum zero-reflection schedule.

#include <functional>
#include <vector>

#include "qmem/profile.hpp"

namespace qmem {

/// Real input amplitude A_in(tau) = sqrt(intensity) and the stored amplitude
/// seed at the start time tau_i.
struct ClassicalField {
    std::function<double(double)> intensity;
    /// Integral of the intensity over [tau_i, tau]; numerical quadrature if empty.
    std::function<double(double)> absorbed;
    std::vector<double> breakpoints;
    double tau_i = 0.0;
    /// A0^2; the denominator seed.
    double seed_sq = 0.0;

    /// Field with A_in^2 = r_in, seeded with A_in^2(tau_i).
    static ClassicalField from_profile(const InputProfile& profile, double tau_i);
    static ClassicalField from_profile(const InputProfile& profile, double tau_i,
                                       double seed_sq);
    /// A_in^2 = value on [0, inf).
    static ClassicalField constant(double value, double tau_i);
};

/// A^2(tau) = A0^2 + integral of A_in^2 over [tau_i, tau].
double semiclassical_population(const ClassicalField& field, double tau);

/// kappa(tau) = A_in^2(tau) / A^2(tau). SingularCoupling when A^2 = 0.
double semiclassical_coupling(const ClassicalField& field, double tau);

/// A_in + sqrt(kappa) A with A = -sqrt(A^2); zero under the optimal coupling.
double semiclassical_output(const ClassicalField& field, double tau);

struct SemiclassicalComparison {
    /// max |kappa_q - kappa_sc| / kappa_q over the sampled window.
    double max_relative_deviation = 0.0;
    /// max |A_out| of the classical solution over the same window.
    double max_output_amplitude = 0.0;
    double tau_c = 0.0;
    double tau_end = 0.0;
    std::size_t samples = 0;
};

/// Lossless quantum schedule against the semiclassical coupling seeded at
/// (tau_c, beta^2(tau_c)), sampled uniformly on [tau_c, horizon].
/// `kappa_scale` multiplies the semiclassical coupling and exists for
/// detector tests only.
SemiclassicalComparison compare_with_full_quantum(const InputProfile& profile,
                                                  std::size_t samples = 4001,
                                                  double kappa_scale = 1.0);

}  // namespace qmem
