#include "qmem/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "qmem/errors.hpp"
#include "qmem/interp.hpp"
#include "qmem/io.hpp"
#include "qmem/numeric.hpp"
#include "qmem/ode.hpp"

namespace qmem {

namespace {

// Below this source amplitude beta1 follows the exact identity
// beta1^2 = 1 - integral of r_in instead of the singular ODE.
constexpr double kSourceFloor = 1e-4;

void check_options(const SimulationOptions& opts) {
    if (!(opts.tol >= 1e-13 && opts.tol <= 1e-6))
        throw DomainError("tolerance must lie in [1e-13, 1e-6]");
    if (!(opts.beta0 <= 0.0)) throw DomainError("initial memory amplitude must be <= 0");
}

void check_grid(std::span<const double> grid) {
    if (grid.empty()) throw DomainError("empty sample grid");
    if (grid.front() < 0.0) throw DomainError("sample grid must start at tau >= 0");
    for (std::size_t k = 1; k < grid.size(); ++k)
        if (!(grid[k] > grid[k - 1])) throw DomainError("sample grid must increase strictly");
}

ode::Options ode_options(const InputProfile& profile, const SimulationOptions& opts) {
    ode::Options o;
    // Safety factor so that the energy-balance residual stays within 50 tol.
    o.rtol = 0.03 * opts.tol;
    o.atol = 3e-4 * opts.tol;
    o.max_step = opts.max_step > 0.0 ? opts.max_step : std::min(1.0, 0.25 * profile.time_scale());
    return o;
}

std::vector<double> all_breakpoints(const InputProfile& profile, const CouplingFn& kappa,
                                    double tau_end) {
    auto bps = profile.breakpoints_in(0.0, tau_end);
    bps.insert(bps.end(), kappa.breakpoints.begin(), kappa.breakpoints.end());
    std::sort(bps.begin(), bps.end());
    return bps;
}

double checked_kappa(const CouplingFn& kappa, double tau) {
    const double k = kappa.kappa(tau);
    if (!std::isfinite(k) || k < 0.0)
        throw DomainError("coupling must be finite and non-negative at tau = " +
                          io::format_double(tau));
    return k;
}

// kappa1 = r_in / beta1^2 with beta1^2 taken from the exact identity.
double source_rate(const InputProfile& profile, double tau) {
    const double r = profile.rate(tau);
    const double remaining = 1.0 - profile.cumulative(tau);
    return (r > 0.0 && remaining > 0.0) ? r / remaining : 0.0;
}

}  // namespace

CouplingFn CouplingFn::from_schedule(std::shared_ptr<const CouplingSchedule> schedule) {
    CouplingFn fn;
    fn.breakpoints = schedule->breakpoints_in(0.0, numeric::kInf);
    fn.kappa = [schedule](double tau) { return schedule->kappa(tau); };
    return fn;
}

CouplingFn CouplingFn::constant(double value) {
    if (!(value >= 0.0 && std::isfinite(value)))
        throw DomainError("constant coupling must be finite and non-negative");
    return {[value](double) { return value; }, {}};
}

CouplingFn CouplingFn::tabulated(std::vector<double> tau, std::vector<double> kappa) {
    if (tau.size() != kappa.size()) throw DomainError("coupling table columns differ in length");
    for (double k : kappa)
        if (!(k >= 0.0)) throw DomainError("tabulated coupling must be non-negative");
    // Runs of equal values (the charging stage) are interpolated separately from
    // their neighbours so that the slope jump where a run ends is kept.
    const std::size_t n = tau.size();
    std::vector<std::size_t> cuts{0};
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const bool flat_left = kappa[k - 1] == kappa[k];
        const bool flat_right = kappa[k] == kappa[k + 1];
        if (flat_left != flat_right) cuts.push_back(k);
    }
    if (n > 0) cuts.push_back(n - 1);
    std::vector<double> starts;
    std::vector<numeric::MonotoneCubic> pieces;
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        const auto lo = static_cast<std::ptrdiff_t>(cuts[c]);
        const auto hi = static_cast<std::ptrdiff_t>(cuts[c + 1]) + 1;
        pieces.emplace_back(std::vector<double>(tau.begin() + lo, tau.begin() + hi),
                            std::vector<double>(kappa.begin() + lo, kappa.begin() + hi));
        starts.push_back(tau[cuts[c]]);
    }
    if (pieces.empty()) throw DomainError("coupling table needs at least two rows");
    auto shared = std::make_shared<const std::vector<numeric::MonotoneCubic>>(std::move(pieces));
    auto eval = [shared, starts](double t) {
        const auto it = std::upper_bound(starts.begin(), starts.end(), t);
        const auto k = it == starts.begin() ? 0 : static_cast<std::size_t>(it - starts.begin()) - 1;
        return std::max(0.0, (*shared)[k](t));
    };
    return {eval, std::move(tau)};
}

CouplingFn CouplingFn::scaled(double factor) const {
    auto inner = kappa;
    return {[inner, factor](double t) { return factor * inner(t); }, breakpoints};
}

double reflection_rate(double beta, double kappa, double r_in) {
    const double a = beta * std::sqrt(kappa) + std::sqrt(r_in);
    return a * a;
}

Trajectory simulate_amplitudes(const InputProfile& profile, const MemoryParams& params,
                               const CouplingFn& kappa, std::span<const double> grid,
                               const SimulationOptions& opts) {
    params.validate();
    check_options(opts);
    check_grid(grid);
    const double ki = params.kappa_i;

    // y = (beta1, beta, cum_reflection, cum_intrinsic)
    using Solver = ode::DormandPrince<4>;
    auto rhs = [&](double t, const Solver::State& y, Solver::State& dy) {
        const double k = checked_kappa(kappa, t);
        const double r = profile.rate(t);
        const double sr = std::sqrt(r);
        dy[0] = y[0] > kSourceFloor ? -0.5 * r / y[0] : 0.0;
        dy[1] = -std::sqrt(k) * sr - 0.5 * (k + ki) * y[1];
        dy[2] = reflection_rate(y[1], k, r);
        dy[3] = ki * y[1] * y[1];
    };

    Trajectory traj;
    traj.kappa_i = ki;
    traj.samples.reserve(grid.size());
    auto observe = [&](double t, const Solver::State& y) {
        const double k = checked_kappa(kappa, t);
        const double r = profile.rate(t);
        double b1 = y[0];
        if (!(b1 > kSourceFloor)) b1 = std::sqrt(std::max(0.0, 1.0 - profile.cumulative(t)));
        traj.samples.push_back({t, b1, y[1], k, r, reflection_rate(y[1], k, r), y[2], y[3]});
    };

    Solver solver(rhs, ode_options(profile, opts));
    const auto bps = all_breakpoints(profile, kappa, grid.back());
    solver.solve(0.0, {1.0, opts.beta0, 0.0, 0.0}, grid, bps, observe);
    return traj;
}

double Trajectory::max_reflection_after(double tau_from) const {
    double m = 0.0;
    for (const auto& s : samples)
        if (s.tau > tau_from) m = std::max(m, s.r_out);
    return m;
}

double Trajectory::max_bookkeeping_error() const {
    if (samples.empty()) return 0.0;
    auto total = [](const TrajectorySample& s) {
        return s.beta1 * s.beta1 + s.beta * s.beta + s.cum_reflection + s.cum_intrinsic;
    };
    const double initial = total(samples.front());
    double m = 0.0;
    for (const auto& s : samples) m = std::max(m, std::abs(total(s) - initial));
    return m;
}

double energy_balance_residual(const Trajectory& trajectory) {
    const auto& s = trajectory.samples;
    if (s.size() < 2) throw DomainError("energy balance needs at least two samples");
    auto pop = [&](std::size_t k) { return s[k].beta * s[k].beta; };
    auto residual = [&](std::size_t k, double deriv) {
        return std::abs(s[k].r_in - deriv - trajectory.kappa_i * pop(k) - s[k].r_out);
    };
    if (s.size() == 2) {
        const double d = (pop(1) - pop(0)) / (s[1].tau - s[0].tau);
        return std::max(residual(0, d), residual(1, d));
    }
    double m = 0.0;
    for (std::size_t k = 1; k + 1 < s.size(); ++k) {
        const double h0 = s[k].tau - s[k - 1].tau;
        const double h1 = s[k + 1].tau - s[k].tau;
        const double d = (-h1 / (h0 * (h0 + h1))) * pop(k - 1) +
                         ((h1 - h0) / (h0 * h1)) * pop(k) +
                         (h0 / (h1 * (h0 + h1))) * pop(k + 1);
        m = std::max(m, residual(k, d));
    }
    return m;
}

std::string trajectory_csv(const Trajectory& trajectory) {
    io::CsvWriter w({"tau", "kappa", "r_in", "beta1_sq", "beta_sq", "r_out", "cum_reflection",
                     "cum_intrinsic"});
    for (const auto& s : trajectory.samples)
        w.add_row({s.tau, s.kappa, s.r_in, s.beta1 * s.beta1, s.beta * s.beta, s.r_out,
                   s.cum_reflection, s.cum_intrinsic});
    return w.str();
}

DensityMatrix3 DensityMatrix3::source_excited() {
    Matrix m = Matrix::Zero();
    m(1, 1) = 1.0;
    return DensityMatrix3(m);
}

double DensityMatrix3::hermiticity_error() const {
    return (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix3::min_eigenvalue() const {
    const Matrix herm = 0.5 * (m_ + m_.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(herm, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

std::vector<MasterSample> simulate_master_equation(const InputProfile& profile,
                                                   const MemoryParams& params,
                                                   const CouplingFn& kappa,
                                                   std::span<const double> grid,
                                                   const SimulationOptions& opts) {
    params.validate();
    check_options(opts);
    check_grid(grid);
    if (opts.beta0 != 0.0) throw DomainError("master equation starts from |10> only");
    using Matrix = DensityMatrix3::Matrix;
    using Solver = ode::DormandPrince<18>;
    const double ki = params.kappa_i;

    auto unpack = [](const Solver::State& y) {
        Matrix m;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                m(i, j) = {y[static_cast<std::size_t>(2 * (3 * i + j))],
                           y[static_cast<std::size_t>(2 * (3 * i + j) + 1)]};
        return m;
    };
    auto pack = [](const Matrix& m) {
        Solver::State y;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                y[static_cast<std::size_t>(2 * (3 * i + j))] = m(i, j).real();
                y[static_cast<std::size_t>(2 * (3 * i + j) + 1)] = m(i, j).imag();
            }
        return y;
    };

    auto rhs = [&](double t, const Solver::State& y, Solver::State& dy) {
        const double k = checked_kappa(kappa, t);
        const double k1 = source_rate(profile, t);
        const double g = std::sqrt(k1 * k);
        const Matrix rho = unpack(y);
        Matrix h = Matrix::Zero();
        h(1, 2) = {0.0, 0.5 * g};
        h(2, 1) = {0.0, -0.5 * g};
        Matrix lt = Matrix::Zero();
        lt(0, 1) = std::sqrt(k1);
        lt(0, 2) = std::sqrt(k);
        Matrix li = Matrix::Zero();
        li(0, 2) = std::sqrt(ki);
        const std::complex<double> minus_i{0.0, -1.0};
        Matrix d = minus_i * (h * rho - rho * h);
        for (const Matrix* l : {&lt, &li}) {
            const Matrix ldl = l->adjoint() * (*l);
            d += (*l) * rho * l->adjoint() - 0.5 * (ldl * rho + rho * ldl);
        }
        dy = pack(d);
    };

    std::vector<MasterSample> out;
    out.reserve(grid.size());
    auto observe = [&](double t, const Solver::State& y) {
        out.push_back({t, DensityMatrix3(unpack(y))});
    };
    Solver solver(rhs, ode_options(profile, opts));
    const auto bps = all_breakpoints(profile, kappa, grid.back());
    solver.solve(0.0, pack(DensityMatrix3::source_excited().matrix()), grid, bps, observe);
    return out;
}

ReductionCheck verify_nonhermitian_reduction(const InputProfile& profile,
                                             const MemoryParams& params,
                                             const CouplingFn& master_kappa,
                                             const CouplingFn& amplitude_kappa,
                                             std::span<const double> grid,
                                             const SimulationOptions& opts) {
    const auto traj = simulate_amplitudes(profile, params, amplitude_kappa, grid, opts);
    const auto rho = simulate_master_equation(profile, params, master_kappa, grid, opts);
    ReductionCheck check;
    check.min_eigenvalue = numeric::kInf;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto& s = traj.samples[k];
        const auto& m = rho[k].rho;
        const double psi[2] = {s.beta1, s.beta};
        double dev = 0.0;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                dev = std::max(dev, std::abs(m(i + 1, j + 1) - psi[i] * psi[j]));
        check.max_deviation = std::max(check.max_deviation, dev);
        check.max_trace_error = std::max(check.max_trace_error, std::abs(m.trace() - 1.0));
        check.max_ground_mismatch =
            std::max(check.max_ground_mismatch,
                     std::abs(m(0, 0).real() - (s.cum_reflection + s.cum_intrinsic)));
        check.max_hermiticity_error = std::max(check.max_hermiticity_error, m.hermiticity_error());
        check.min_eigenvalue = std::min(check.min_eigenvalue, m.min_eigenvalue());
    }
    return check;
}

std::vector<double> simulation_grid(const InputProfile& profile, double tau_switch,
                                    double tau_end, double tol,
                                    std::span<const double> required) {
    if (!(tau_end > 0.0)) throw DomainError("tau_end must be positive");
    if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
    // Centred-difference error is h^2/6 times the third derivative of beta^2,
    // which scales like peak_rate early on and like time_scale^-3 later.
    const double ts = profile.time_scale();
    double fine = std::clamp(std::sqrt(10.0 * tol / profile.peak_rate()), 1e-5, 0.05);
    double coarse = std::clamp(std::sqrt(10.0 * tol) * ts * std::sqrt(ts), fine, 0.5);
    const double sw = std::clamp(tau_switch, 0.0, tau_end);
    constexpr double kMaxSamples = 4e6;
    const double count = sw / fine + (tau_end - sw) / coarse;
    if (count > kMaxSamples) {
        fine *= count / kMaxSamples;
        coarse *= count / kMaxSamples;
    }
    std::vector<double> grid;
    const auto n_fine = static_cast<std::size_t>(std::ceil(sw / fine));
    for (std::size_t k = 0; k < n_fine; ++k) grid.push_back(sw * static_cast<double>(k) / n_fine);
    const auto n_coarse =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((tau_end - sw) / coarse)));
    for (std::size_t k = 0; k <= n_coarse; ++k)
        grid.push_back(sw + (tau_end - sw) * static_cast<double>(k) / n_coarse);
    std::vector<double> keep;
    for (double b : required)
        if (b >= 0.0 && b <= tau_end) keep.push_back(b);
    std::sort(keep.begin(), keep.end());
    // Regular points that crowd a required point are dropped so that no
    // centred difference sees a vanishing spacing.
    const double gap = 0.25 * fine;
    std::vector<double> out;
    out.reserve(grid.size() + keep.size());
    std::size_t ki = 0;
    for (double t : grid) {
        while (ki < keep.size() && keep[ki] <= t + gap) {
            if (out.empty() || keep[ki] > out.back()) out.push_back(keep[ki]);
            ++ki;
        }
        if (out.empty() || t - out.back() > gap) out.push_back(t);
    }
    for (; ki < keep.size(); ++ki)
        if (keep[ki] > out.back()) out.push_back(keep[ki]);
    return out;
}

std::vector<double> simulation_grid(const CouplingSchedule& schedule, double tau_end, double tol) {
    const auto& profile = schedule.profile();
    const auto bps = schedule.breakpoints_in(0.0, tau_end);
    return simulation_grid(profile, schedule.tau_c() + 2.0 * profile.time_scale(), tau_end, tol,
                           bps);
}

}  // namespace qmem
