#pragma once

// Time-domain simulation of the source/memory amplitudes under an arbitrary
// coupling, and a Lindblad master-equation oracle on the single-excitation
// space {|00>, |10>, |01>}.

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qmem/profile.hpp"
#include "qmem/protocol.hpp"

namespace qmem {

/// A coupling kappa(tau) with the points where it may be non-smooth.
struct CouplingFn {
    std::function<double(double)> kappa;
    std::vector<double> breakpoints;

    static CouplingFn from_schedule(std::shared_ptr<const CouplingSchedule> schedule);
    static CouplingFn constant(double value);
    /// Shape-preserving cubic through the samples, held constant past the ends.
    static CouplingFn tabulated(std::vector<double> tau, std::vector<double> kappa);
    /// kappa multiplied by factor everywhere.
    CouplingFn scaled(double factor) const;
};

struct SimulationOptions {
    /// Local relative tolerance, in [1e-13, 1e-6].
    double tol = 1e-10;
    /// 0 picks min(1, time_scale / 4).
    double max_step = 0.0;
    /// Initial memory amplitude (<= 0).
    double beta0 = 0.0;
};

struct TrajectorySample {
    double tau;
    double beta1;  ///< >= 0
    double beta;   ///< <= 0 under the optimal schedule
    double kappa;
    double r_in;
    double r_out;
    double cum_reflection;
    double cum_intrinsic;
};

struct Trajectory {
    double kappa_i = 0.0;
    std::vector<TrajectorySample> samples;

    /// Largest r_out over samples with tau > tau_from.
    double max_reflection_after(double tau_from) const;
    /// Largest drift of beta1^2 + beta^2 + cum_reflection + cum_intrinsic
    /// from its initial value.
    double max_bookkeeping_error() const;
};

/// Integrates beta1' = -(kappa1/2) beta1 and beta' = -sqrt(kappa1 kappa) beta1 -
/// (kappa + kappa_i)/2 beta with kappa1 beta1^2 = r_in. Samples at every grid
/// point (ascending, starting at 0). StepFailure if the tolerance cannot be met.
Trajectory simulate_amplitudes(const InputProfile& profile, const MemoryParams& params,
                               const CouplingFn& kappa, std::span<const double> grid,
                               const SimulationOptions& opts = {});

/// (beta sqrt(kappa) + sqrt(r_in))^2.
double reflection_rate(double beta, double kappa, double r_in);

/// max |r_in - d(beta^2)/dtau - kappa_i beta^2 - r_out| over interior samples,
/// with a three-point centred derivative on the (possibly non-uniform) grid.
double energy_balance_residual(const Trajectory& trajectory);

/// Schedule-style CSV plus cum_reflection,cum_intrinsic columns.
std::string trajectory_csv(const Trajectory& trajectory);

class DensityMatrix3 {
public:
    using Matrix = Eigen::Matrix3cd;

    DensityMatrix3() : m_(Matrix::Zero()) {}
    explicit DensityMatrix3(const Matrix& m) : m_(m) {}

    /// Pure |10> state.
    static DensityMatrix3 source_excited();

    const Matrix& matrix() const noexcept { return m_; }
    std::complex<double> operator()(int i, int j) const { return m_(i, j); }
    double trace() const { return m_.trace().real(); }
    /// Largest |rho - rho^dagger| entry.
    double hermiticity_error() const;
    double min_eigenvalue() const;

private:
    Matrix m_;
};

struct MasterSample {
    double tau;
    DensityMatrix3 rho;
};

/// Lindblad evolution from |10><10| with L_T = sqrt(kappa) a + sqrt(kappa1) a1,
/// L_i = sqrt(kappa_i) a and the cascade Hamiltonian.
std::vector<MasterSample> simulate_master_equation(const InputProfile& profile,
                                                   const MemoryParams& params,
                                                   const CouplingFn& kappa,
                                                   std::span<const double> grid,
                                                   const SimulationOptions& opts = {});

struct ReductionCheck {
    /// max over samples of the largest |rho_block - psi psi^dagger| entry.
    double max_deviation = 0.0;
    double max_trace_error = 0.0;
    /// max |rho_00 - (cum_reflection + cum_intrinsic)|.
    double max_ground_mismatch = 0.0;
    double max_hermiticity_error = 0.0;
    double min_eigenvalue = 0.0;
};

/// Runs both evolutions on the same grid. `amplitude_kappa` drives the
/// non-Hermitian route and `master_kappa` the Lindblad route; they are the same
/// coupling except in fault-injection runs.
ReductionCheck verify_nonhermitian_reduction(const InputProfile& profile,
                                             const MemoryParams& params,
                                             const CouplingFn& master_kappa,
                                             const CouplingFn& amplitude_kappa,
                                             std::span<const double> grid,
                                             const SimulationOptions& opts = {});

inline ReductionCheck verify_nonhermitian_reduction(const InputProfile& profile,
                                                    const MemoryParams& params,
                                                    const CouplingFn& kappa,
                                                    std::span<const double> grid,
                                                    const SimulationOptions& opts = {}) {
    return verify_nonhermitian_reduction(profile, params, kappa, kappa, grid, opts);
}

/// Sample grid on [0, tau_end] dense enough for the centred-difference energy
/// balance to resolve integrator errors of size tol: a fine spacing up to
/// tau_switch (where stage-1 transients live), a profile-scaled spacing after,
/// plus every required point (breakpoints, export times) kept exactly.
std::vector<double> simulation_grid(const InputProfile& profile, double tau_switch,
                                    double tau_end, double tol,
                                    std::span<const double> required = {});

/// As above with tau_switch = tau_c + 2 time scales and the schedule breakpoints.
std::vector<double> simulation_grid(const CouplingSchedule& schedule, double tau_end, double tol);

}  // namespace qmem
