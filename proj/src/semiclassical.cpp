#include "qmem/semiclassical.hpp"

#include <algorithm>
#include <cmath>

#include "qmem/errors.hpp"
#include "qmem/numeric.hpp"
#include "qmem/protocol.hpp"

namespace qmem {

ClassicalField ClassicalField::from_profile(const InputProfile& profile, double tau_i) {
    return from_profile(profile, tau_i, profile.rate(tau_i));
}

ClassicalField ClassicalField::from_profile(const InputProfile& profile, double tau_i,
                                            double seed_sq) {
    if (!(seed_sq >= 0.0)) throw DomainError("seed must be non-negative");
    ClassicalField f;
    f.intensity = [profile](double t) { return profile.rate(t); };
    const double base = profile.cumulative(tau_i);
    f.absorbed = [profile, base](double t) { return profile.cumulative(t) - base; };
    f.breakpoints = profile.breakpoints_in(tau_i, numeric::kInf);
    f.tau_i = tau_i;
    f.seed_sq = seed_sq;
    return f;
}

ClassicalField ClassicalField::constant(double value, double tau_i) {
    if (!(value >= 0.0)) throw DomainError("intensity must be non-negative");
    ClassicalField f;
    f.intensity = [value](double) { return value; };
    f.absorbed = [value, tau_i](double t) { return value * (t - tau_i); };
    f.tau_i = tau_i;
    f.seed_sq = value;
    return f;
}

double semiclassical_population(const ClassicalField& field, double tau) {
    if (tau < field.tau_i) throw DomainError("tau must not precede tau_i");
    if (field.absorbed) return field.seed_sq + field.absorbed(tau);
    return field.seed_sq +
           numeric::integrate(field.intensity, field.tau_i, tau, field.breakpoints);
}

double semiclassical_coupling(const ClassicalField& field, double tau) {
    const double den = semiclassical_population(field, tau);
    if (!(den > 0.0)) throw SingularCoupling("stored classical amplitude is zero");
    return field.intensity(tau) / den;
}

double semiclassical_output(const ClassicalField& field, double tau) {
    const double a = -std::sqrt(semiclassical_population(field, tau));
    return std::sqrt(field.intensity(tau)) + std::sqrt(semiclassical_coupling(field, tau)) * a;
}

SemiclassicalComparison compare_with_full_quantum(const InputProfile& profile,
                                                  std::size_t samples, double kappa_scale) {
    const MemoryParams lossless{0.0};
    const auto schedule = build_schedule(profile, lossless);
    SemiclassicalComparison cmp;
    cmp.tau_c = schedule.tau_c();
    cmp.tau_end = std::max(profile.horizon(), cmp.tau_c);
    const auto field =
        ClassicalField::from_profile(profile, cmp.tau_c, schedule.population(cmp.tau_c));
    for (double t : numeric::linspace(cmp.tau_c, cmp.tau_end, std::max<std::size_t>(samples, 2))) {
        const double kq = schedule.kappa(t);
        const double ksc = kappa_scale * semiclassical_coupling(field, t);
        const double diff = std::abs(kq - ksc);
        cmp.max_relative_deviation =
            std::max(cmp.max_relative_deviation, kq > 0.0 ? diff / kq : diff);
        cmp.max_output_amplitude =
            std::max(cmp.max_output_amplitude, std::abs(semiclassical_output(field, t)));
        ++cmp.samples;
    }
    return cmp;
}

}  // namespace qmem
