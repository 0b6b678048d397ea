#include <doctest.h>

#include <cmath>
#include <memory>

#include "oracles.hpp"
#include "qmem/dynamics.hpp"
#include "qmem/errors.hpp"
#include "qmem/numeric.hpp"
#include "qmem/ode.hpp"

using namespace qmem;
using doctest::Approx;

namespace {

InputProfile silent_profile() { return InputProfile::tabulated({{0.0, 0.0}, {200.0, 0.0}}); }

struct Run {
    std::shared_ptr<const CouplingSchedule> schedule;
    std::vector<double> grid;
    Trajectory trajectory;
};

Run optimal_run(const InputProfile& p, double ki, double tol) {
    Run run;
    run.schedule = std::make_shared<const CouplingSchedule>(build_schedule(p, MemoryParams{ki}));
    run.grid = simulation_grid(*run.schedule, p.horizon(), tol);
    SimulationOptions o;
    o.tol = tol;
    run.trajectory = simulate_amplitudes(p, MemoryParams{ki}, CouplingFn::from_schedule(run.schedule),
                                         run.grid, o);
    return run;
}

}  // namespace

TEST_CASE("Dormand-Prince against closed form and RK4") {
    ode::Options o;
    o.rtol = 1e-12;
    o.atol = 1e-14;
    ode::DormandPrince<2> solver(
        [](double t, const std::array<double, 2>& y, std::array<double, 2>& dy) {
            dy[0] = y[1];
            dy[1] = -y[0] - 0.1 * y[1] + (t > 3.0 ? 1.0 : 0.0);
        },
        o);
    const double outs[] = {1.0, 3.0, 7.5};
    const double bps[] = {3.0};
    std::vector<std::array<double, 2>> got;
    solver.solve(0.0, {1.0, 0.0}, outs, bps, [&](double, const auto& y) { got.push_back(y); });
    REQUIRE(got.size() == 3);

    oracle::Rhs f = [](double t, const oracle::State& y) {
        return oracle::State{y[1], -y[0] - 0.1 * y[1] + (t > 3.0 ? 1.0 : 0.0)};
    };
    auto y3 = oracle::rk4(f, {1.0, 0.0}, 0.0, 3.0, 30000);
    auto y75 = oracle::rk4(f, y3, 3.0, 7.5, 45000);
    CHECK(got[1][0] == Approx(y3[0]).epsilon(1e-10));
    CHECK(std::abs(got[2][0] - y75[0]) < 1e-10);
    CHECK(std::abs(got[2][1] - y75[1]) < 1e-10);
}

TEST_CASE("reflection rate formula") {
    CHECK(reflection_rate(-0.1, 1.0, 0.04) == Approx(0.01).epsilon(1e-14));
    CHECK(reflection_rate(-0.2, 1.0, 0.04) == Approx(0.0).epsilon(1e-14));
    CHECK(reflection_rate(0.0, 0.3, 0.04) == Approx(0.04).epsilon(1e-14));
}

TEST_CASE("zero coupling leaves the memory empty and reflects everything") {
    const auto p = InputProfile::exponential(0.1);
    const auto grid = numeric::linspace(0.0, 100.0, 201);
    const auto t = simulate_amplitudes(p, MemoryParams{1e-3}, CouplingFn::constant(0.0), grid);
    for (const auto& s : t.samples) {
        CHECK(s.beta == 0.0);
        CHECK(s.r_out == Approx(s.r_in).epsilon(1e-14));
        CHECK(s.cum_reflection == Approx(-std::expm1(-0.1 * s.tau)).epsilon(1e-9));
    }
}

TEST_CASE("seeded memory decays at (kappa + kappa_i) / 2") {
    const auto p = silent_profile();
    SimulationOptions o;
    o.beta0 = -0.6;
    const double kappa = 0.3, ki = 0.01;
    const auto grid = numeric::linspace(0.0, 20.0, 81);
    const auto t = simulate_amplitudes(p, MemoryParams{ki}, CouplingFn::constant(kappa), grid, o);
    for (const auto& s : t.samples) {
        CHECK(s.beta == Approx(-0.6 * std::exp(-0.5 * (kappa + ki) * s.tau)).epsilon(1e-9));
        CHECK(s.r_out == Approx(kappa * s.beta * s.beta).epsilon(1e-9));
    }
    CHECK(t.max_bookkeeping_error() < 1e-9);
}

TEST_CASE("memory amplitude under constant coupling against RK4") {
    const double r = 0.2, kappa = 0.45, ki = 1e-2;
    const auto p = InputProfile::exponential(r);
    const double outs[] = {0.0, 4.0, 12.0};
    const auto t = simulate_amplitudes(p, MemoryParams{ki}, CouplingFn::constant(kappa), outs);
    oracle::Rhs f = [&](double tau, const oracle::State& y) {
        return oracle::State{-std::sqrt(kappa) * std::sqrt(oracle::exp_rate(r, tau)) -
                             0.5 * (kappa + ki) * y[0]};
    };
    const auto b4 = oracle::rk4(f, {0.0}, 0.0, 4.0, 40000);
    const auto b12 = oracle::rk4(f, b4, 4.0, 12.0, 80000);
    CHECK(std::abs(t.samples[1].beta - b4[0]) < 1e-10);
    CHECK(std::abs(t.samples[2].beta - b12[0]) < 1e-10);
    CHECK(t.samples[2].beta1 == Approx(std::exp(-0.5 * r * 12.0)).epsilon(1e-9));
}

TEST_CASE("optimal schedule: energy balance, zero reflection, source depletion") {
    for (const auto& p : {InputProfile::exponential(0.036), InputProfile::gaussian(0.1533)}) {
        const double tol = 1e-10;
        const auto run = optimal_run(p, 1e-4, tol);
        CHECK(energy_balance_residual(run.trajectory) <= 50.0 * tol);
        CHECK(run.trajectory.max_reflection_after(run.schedule->tau_c() + 1e-6) <= 1e-9);
        CHECK(run.trajectory.max_bookkeeping_error() <= 10.0 * tol);
        for (std::size_t k = 0; k < run.trajectory.samples.size(); k += 97) {
            const auto& s = run.trajectory.samples[k];
            CHECK(std::abs(s.beta1 * s.beta1 - (1.0 - p.truncation_deficit() - p.cumulative(s.tau)) -
                           p.truncation_deficit()) <= 10.0 * tol);
            CHECK(std::abs(s.beta - run.schedule->amplitude(s.tau)) <= 1e-7);
        }
    }
}

TEST_CASE("energy balance residual shrinks with the tolerance") {
    const auto p = InputProfile::exponential(0.036);
    const double loose = energy_balance_residual(optimal_run(p, 1e-4, 1e-7).trajectory);
    const double tight = energy_balance_residual(optimal_run(p, 1e-4, 1e-11).trajectory);
    CHECK(tight < loose);
    CHECK(tight <= 50.0 * 1e-11);
}

TEST_CASE("energy balance residual detects an inconsistent trajectory") {
    Trajectory t;
    for (int k = 0; k < 5; ++k) {
        TrajectorySample s{};
        s.tau = 0.5 * k;
        s.r_in = 0.1;
        t.samples.push_back(s);
    }
    CHECK(energy_balance_residual(t) == Approx(0.1).epsilon(1e-14));
}

TEST_CASE("master equation with no input and no coupling stays put") {
    const auto grid = numeric::linspace(0.0, 10.0, 11);
    const auto samples = simulate_master_equation(silent_profile(), MemoryParams{0.0},
                                                  CouplingFn::constant(0.0), grid);
    for (const auto& s : samples) {
        CHECK((s.rho.matrix() - DensityMatrix3::source_excited().matrix()).cwiseAbs().maxCoeff() ==
              0.0);
    }
}

TEST_CASE("master equation reproduces the amplitude populations") {
    const auto p = InputProfile::gaussian(0.1533);
    const MemoryParams m{1e-3};
    auto schedule = std::make_shared<const CouplingSchedule>(build_schedule(p, m));
    const auto grid = numeric::linspace(0.0, 40.0, 401);
    const auto kappa = CouplingFn::from_schedule(schedule);
    const auto rho = simulate_master_equation(p, m, kappa, grid);
    const auto amp = simulate_amplitudes(p, m, kappa, grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto& r = rho[k].rho;
        const auto& a = amp.samples[k];
        CHECK(std::abs(r.trace() - 1.0) < 1e-10);
        CHECK(std::abs(r(1, 1).real() - a.beta1 * a.beta1) < 1e-8);
        CHECK(std::abs(r(2, 2).real() - a.beta * a.beta) < 1e-8);
        CHECK(std::abs(r(1, 2).real() - a.beta1 * a.beta) < 1e-8);
        CHECK(r.hermiticity_error() < 1e-12);
        CHECK(r.min_eigenvalue() > -1e-10);
    }
    const auto check = verify_nonhermitian_reduction(p, m, kappa, grid);
    CHECK(check.max_deviation < 1e-8);
    CHECK(check.max_ground_mismatch < 1e-8);
    CHECK(check.max_trace_error < 1e-10);

    const auto faulty = verify_nonhermitian_reduction(p, m, kappa, kappa.scaled(1.01), grid);
    CHECK(faulty.max_deviation > 1e-6);
}

TEST_CASE("tabulated coupling replays a schedule") {
    const auto p = InputProfile::exponential(0.036);
    const MemoryParams m{1e-4};
    auto schedule = std::make_shared<const CouplingSchedule>(build_schedule(p, m));
    const auto tau = schedule_grid(*schedule, 4001, 400.0);
    std::vector<double> k(tau.size());
    for (std::size_t i = 0; i < tau.size(); ++i) k[i] = schedule->kappa(tau[i]);
    const auto table = CouplingFn::tabulated(tau, k);
    CHECK(table.kappa(schedule->tau_c()) == Approx(1.0).epsilon(1e-12));
    for (double t : {0.3, 50.05, 123.4}) {
        CHECK(table.kappa(t) == Approx(schedule->kappa(t)).epsilon(1e-6));
    }
    const double outs[] = {0.0, 100.0, 400.0};
    const auto a = simulate_amplitudes(p, m, CouplingFn::from_schedule(schedule), outs);
    const auto b = simulate_amplitudes(p, m, table, outs);
    CHECK(std::abs(a.samples[2].beta - b.samples[2].beta) < 1e-6);
}

TEST_CASE("simulation inputs are validated") {
    const auto p = InputProfile::exponential(0.1);
    const double bad_grid[] = {0.0, 1.0, 1.0};
    CHECK_THROWS_AS(simulate_amplitudes(p, MemoryParams{0.0}, CouplingFn::constant(1.0), bad_grid),
                    DomainError);
    SimulationOptions o;
    o.tol = 1e-3;
    const double grid[] = {0.0, 1.0};
    CHECK_THROWS_AS(simulate_amplitudes(p, MemoryParams{0.0}, CouplingFn::constant(1.0), grid, o),
                    DomainError);
    CHECK_THROWS_AS(CouplingFn::constant(-1.0), DomainError);
    CHECK_THROWS_AS(CouplingFn::tabulated({0.0, 1.0}, {1.0, -0.5}), DomainError);
}
