#include "qmem/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "qmem/dynamics.hpp"
#include "qmem/errors.hpp"
#include "qmem/io.hpp"
#include "qmem/numeric.hpp"
#include "qmem/profile.hpp"
#include "qmem/protocol.hpp"
#include "qmem/semiclassical.hpp"
#include "qmem/sweep.hpp"

namespace qmem::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kExpOperatingPoint = "exp:r=0.036";
constexpr const char* kGaussOperatingPoint = "gauss:r=0.1533,n=4";
constexpr double kReductionBound = 1e-8;
constexpr double kTraceBound = 1e-10;
constexpr double kGroundBound = 1e-8;
constexpr double kSemiclassicalBound = 1e-9;
constexpr double kSemiclassicalTableBound = 1e-6;

struct Config {
    std::string profile;
    double kappa_i = 0.0;
    double tol = 1e-10;
    std::size_t samples = 2001;
    std::string out = ".";
    std::optional<double> tau_end;
    std::string kappa;
    bool strict = false;
    std::string family = "exp";
    double gauss_n = 4.0;
    std::string grid_ki;
    std::string grid_r;
    unsigned threads = 0;
    std::string suite = "all";
    double fault_scale = 1.0;
};

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        parts.push_back(s.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

InputProfile load_profile(const Config& cfg) {
    if (cfg.profile.empty()) throw DomainError("--profile is required");
    auto profile = parse_profile_literal(cfg.profile);
    const auto report = validate(profile);
    if (!report.ok()) {
        std::string msg = "invalid profile:";
        for (const auto& f : report.failures) msg += "\n  " + f;
        throw DomainError(msg);
    }
    return profile;
}

MemoryParams load_params(const Config& cfg) {
    MemoryParams p{cfg.kappa_i};
    p.validate();
    return p;
}

ScheduleOptions schedule_options(const Config& cfg) {
    ScheduleOptions o;
    o.policy = cfg.strict ? FeasibilityPolicy::Reject : FeasibilityPolicy::Reenter;
    return o;
}

fs::path output_dir(const Config& cfg) {
    fs::path dir(cfg.out);
    fs::create_directories(dir);
    return dir;
}

int cmd_schedule(const Config& cfg, std::ostream& out, std::ostream& err) {
    const auto profile = load_profile(cfg);
    const auto params = load_params(cfg);
    if (cfg.samples < 2) throw DomainError("--samples must be at least 2");
    const auto schedule = build_schedule(profile, params, schedule_options(cfg));
    const auto report = peak_time_and_fidelity(profile, params, schedule);
    const double tau_end = cfg.tau_end.value_or(profile.horizon());
    if (!(tau_end > 0.0)) throw DomainError("--tau-end must be positive");
    const auto grid = schedule_grid(schedule, cfg.samples, tau_end);
    const auto csv = schedule_csv(schedule, grid);
    const auto js = report_json(report);
    const auto dir = output_dir(cfg);
    io::write_file_atomic(dir / "schedule.csv", csv);
    io::write_file_atomic(dir / "report.json", js);
    for (const auto& note : report.notes) err << "note: " << note << '\n';
    out << js;
    return kOk;
}

struct CouplingChoice {
    CouplingFn fn;
    double tau_c = 0.0;
};

CouplingChoice choose_coupling(const Config& cfg, const InputProfile& profile,
                               const MemoryParams& params) {
    CouplingChoice c;
    if (cfg.kappa.empty()) {
        auto schedule = std::make_shared<const CouplingSchedule>(
            build_schedule(profile, params, schedule_options(cfg)));
        c.tau_c = schedule->tau_c();
        c.fn = CouplingFn::from_schedule(schedule);
        if (cfg.fault_scale != 1.0) c.fn = c.fn.scaled(cfg.fault_scale);
        return c;
    }
    try {
        c.tau_c = threshold_time(profile, params);
    } catch (const NoThreshold&) {
        c.tau_c = 0.0;
    }
    const std::string_view spec = cfg.kappa;
    if (spec.starts_with("const:")) {
        c.fn = CouplingFn::constant(io::parse_double(spec.substr(6)));
    } else if (spec.starts_with("file:")) {
        const auto table = io::read_csv(fs::path(std::string(spec.substr(5))));
        c.fn = CouplingFn::tabulated(table.column("tau"), table.column("kappa"));
    } else {
        throw DomainError("--kappa must be const:<value> or file:<path>");
    }
    if (cfg.fault_scale != 1.0) c.fn = c.fn.scaled(cfg.fault_scale);
    return c;
}

int cmd_simulate(const Config& cfg, std::ostream& out, std::ostream&) {
    const auto profile = load_profile(cfg);
    const auto params = load_params(cfg);
    if (cfg.samples < 2) throw DomainError("--samples must be at least 2");
    const auto coupling = choose_coupling(cfg, profile, params);
    const double tau_end = cfg.tau_end.value_or(profile.horizon());
    if (!(tau_end > 0.0)) throw DomainError("--tau-end must be positive");
    SimulationOptions opts;
    opts.tol = cfg.tol;
    // Exported rows sit on a uniform grid regardless of where the coupling has
    // breakpoints, so runs with different coupling sources line up.
    const auto rows = numeric::linspace(0.0, tau_end, cfg.samples);
    auto required = rows;
    for (double b : coupling.fn.breakpoints)
        if (b < tau_end) required.push_back(b);
    const auto grid = simulation_grid(profile, coupling.tau_c + 2.0 * profile.time_scale(),
                                      tau_end, cfg.tol, required);
    const auto traj = simulate_amplitudes(profile, params, coupling.fn, grid, opts);

    Trajectory exported;
    exported.kappa_i = traj.kappa_i;
    std::size_t next = 0;
    for (const auto& s : traj.samples) {
        if (next < rows.size() && s.tau == rows[next]) {
            exported.samples.push_back(s);
            ++next;
        }
    }
    io::write_file_atomic(output_dir(cfg) / "trajectory.csv", trajectory_csv(exported));

    const std::size_t n = traj.samples.size();
    const auto& last = traj.samples.back();
    out << "samples_integrated " << n << '\n'
        << "energy_balance_residual " << io::format_double(energy_balance_residual(traj)) << '\n'
        << "max_stage2_r_out " << io::format_double(traj.max_reflection_after(coupling.tau_c))
        << '\n'
        << "bookkeeping_error " << io::format_double(traj.max_bookkeeping_error()) << '\n'
        << "final_beta_sq " << io::format_double(last.beta * last.beta) << '\n'
        << "final_cum_reflection " << io::format_double(last.cum_reflection) << '\n';
    return kOk;
}

int cmd_sweep(const Config& cfg, std::ostream& out, std::ostream& err) {
    const Family family = parse_family(cfg.family);
    auto ki = cfg.grid_ki.empty() ? default_kappa_i_grid() : parse_grid(cfg.grid_ki);
    auto r = cfg.grid_r.empty() ? default_r_grid(family) : parse_grid(cfg.grid_r);
    SweepOptions opts;
    opts.gauss_n = cfg.gauss_n;
    opts.threads = cfg.threads;
    const auto grid = fidelity_surface(family, std::move(ki), std::move(r), opts);
    for (const auto& w : grid.warnings) err << "warning: " << w << '\n';
    std::size_t failed = 0;
    for (const auto& c : grid.cells) {
        if (c.ok()) continue;
        ++failed;
        err << "cell kappa_i=" << io::format_double(c.kappa_i) << " r=" << io::format_double(c.r)
            << ": " << c.error << '\n';
    }
    const auto path = output_dir(cfg) / "surface.csv";
    io::write_file_atomic(path, surface_csv(grid));
    out << "wrote " << grid.cells.size() << " cells (" << failed << " failed) to "
        << path.string() << '\n';
    return kOk;
}

json check(const std::string& name, const std::string& profile, double value, double bound,
           bool lower_is_better = true) {
    const bool pass = lower_is_better ? value <= bound : value >= bound;
    return {{"name", name}, {"profile", profile}, {"value", value}, {"bound", bound}, {"pass", pass}};
}

json verify_appendix_a(const Config& cfg, const std::string& literal, double kappa_i) {
    auto profile = parse_profile_literal(literal);
    const MemoryParams params{kappa_i};
    params.validate();
    auto schedule = std::make_shared<const CouplingSchedule>(build_schedule(profile, params));
    const auto report = peak_time_and_fidelity(profile, params, *schedule);
    const double tau_end = cfg.tau_end.value_or(
        std::isfinite(report.tau_max) ? report.tau_max : profile.horizon());
    auto grid = numeric::linspace(0.0, tau_end, std::max<std::size_t>(cfg.samples, 2));
    for (double b : schedule->breakpoints_in(0.0, tau_end)) grid.push_back(b);
    std::sort(grid.begin(), grid.end());
    const auto master = CouplingFn::from_schedule(schedule);
    const auto amplitude = master.scaled(cfg.fault_scale);
    SimulationOptions opts;
    opts.tol = cfg.tol;
    const auto res = verify_nonhermitian_reduction(profile, params, master, amplitude, grid, opts);
    json checks = json::array();
    checks.push_back(check("reduction_deviation", literal, res.max_deviation, kReductionBound));
    checks.push_back(check("trace_error", literal, res.max_trace_error, kTraceBound));
    checks.push_back(check("ground_state_mismatch", literal, res.max_ground_mismatch, kGroundBound));
    return checks;
}

json verify_semiclassical(const Config& cfg, const std::string& literal) {
    const auto profile = parse_profile_literal(literal);
    const double bound = profile.kind() == ProfileKind::Tabulated ? kSemiclassicalTableBound
                                                                  : kSemiclassicalBound;
    const auto cmp = compare_with_full_quantum(profile, 4001, cfg.fault_scale);
    json checks = json::array();
    checks.push_back(check("semiclassical_relative_deviation", literal, cmp.max_relative_deviation,
                           bound));
    return checks;
}

int cmd_verify(const Config& cfg, std::ostream& out, std::ostream&) {
    if (cfg.suite != "appendix-a" && cfg.suite != "semiclassical" && cfg.suite != "all")
        throw DomainError("suite must be appendix-a, semiclassical or all");
    std::vector<std::string> literals;
    if (cfg.profile.empty()) {
        literals = {kExpOperatingPoint, kGaussOperatingPoint};
    } else {
        load_profile(cfg);
        literals = {cfg.profile};
    }
    json checks = json::array();
    if (cfg.suite != "semiclassical") {
        const double ki = cfg.profile.empty() ? 1e-4 : cfg.kappa_i;
        for (const auto& lit : literals)
            for (auto& c : verify_appendix_a(cfg, lit, ki)) checks.push_back(c);
    }
    if (cfg.suite != "appendix-a") {
        if (!cfg.profile.empty() && cfg.kappa_i != 0.0)
            throw DomainError("the semiclassical comparison applies to kappa_i = 0 only");
        for (const auto& lit : literals)
            for (auto& c : verify_semiclassical(cfg, lit)) checks.push_back(c);
    }
    bool passed = true;
    for (const auto& c : checks) passed = passed && c["pass"].get<bool>();
    const json summary = {{"suite", cfg.suite}, {"passed", passed}, {"checks", checks}};
    const auto text = summary.dump(2) + "\n";
    if (cfg.out != ".") io::write_file_atomic(output_dir(cfg) / "verify.json", text);
    out << text;
    return passed ? kOk : kVerifyFailed;
}

}  // namespace

std::vector<double> parse_grid(std::string_view spec) {
    std::vector<double> v;
    if (spec.starts_with("log:") || spec.starts_with("lin:")) {
        const auto parts = split(spec.substr(4), ':');
        if (parts.size() != 3) throw DomainError("grid must be <kind>:<lo>:<hi>:<n>");
        const double lo = io::parse_double(parts[0]);
        const double hi = io::parse_double(parts[1]);
        const double n = io::parse_double(parts[2]);
        if (!(n >= 1.0) || n != std::floor(n) || n > 1e6) throw DomainError("bad grid count");
        if (!(hi >= lo)) throw DomainError("grid upper bound below lower bound");
        v = spec.starts_with("log:") ? numeric::logspace(lo, hi, static_cast<std::size_t>(n))
                                     : numeric::linspace(lo, hi, static_cast<std::size_t>(n));
    } else {
        const auto body = spec.starts_with("list:") ? spec.substr(5) : spec;
        for (auto part : split(body, ',')) v.push_back(io::parse_double(part));
    }
    if (v.empty()) throw DomainError("empty grid");
    for (double x : v)
        if (!std::isfinite(x)) throw DomainError("grid values must be finite");
    return v;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Optimal coupling schedules for absorbing a single-excitation pulse into a "
                 "lossy resonator memory"};
    app.require_subcommand(1);
    Config cfg;

    auto add_profile = [&](CLI::App* sub) {
        sub->add_option("--profile", cfg.profile,
                        "exp:r=<rate> | gauss:r=<peak>[,n=<lead>] | table:<csv>");
        sub->add_option("--kappa-i", cfg.kappa_i, "intrinsic loss rate in units of kappa_max");
    };
    auto add_out = [&](CLI::App* sub) {
        sub->add_option("--out", cfg.out, "output directory")->capture_default_str();
    };

    auto* schedule = app.add_subcommand("schedule", "build the optimal schedule and report");
    add_profile(schedule);
    schedule->add_option("--samples", cfg.samples, "rows in the schedule CSV")->capture_default_str();
    schedule->add_option("--tau-end", cfg.tau_end, "end of the exported window");
    schedule->add_flag("--strict", cfg.strict, "fail instead of re-entering the charging stage");
    add_out(schedule);

    auto* simulate = app.add_subcommand("simulate", "integrate the amplitude equations");
    add_profile(simulate);
    simulate->add_option("--tol", cfg.tol, "integrator tolerance in [1e-13, 1e-6]")
        ->capture_default_str();
    simulate->add_option("--samples", cfg.samples, "rows in the trajectory CSV")
        ->capture_default_str();
    simulate->add_option("--tau-end", cfg.tau_end, "end of the simulated window");
    simulate->add_option("--kappa", cfg.kappa, "coupling override: const:<v> or file:<csv>");
    simulate->add_flag("--strict", cfg.strict, "fail instead of re-entering the charging stage");
    simulate->add_option("--fault-kappa-scale", cfg.fault_scale)->group("");
    add_out(simulate);

    auto* sweep = app.add_subcommand("sweep", "fidelity surface over (kappa_i, r)");
    sweep->add_option("--family", cfg.family, "exp or gauss")->capture_default_str();
    sweep->add_option("--n", cfg.gauss_n, "gaussian lead in units of sigma")->capture_default_str();
    sweep->add_option("--grid-ki", cfg.grid_ki, "kappa_i grid (log:lo:hi:n, lin:..., list:...)");
    sweep->add_option("--grid-r", cfg.grid_r, "rate grid (log:lo:hi:n, lin:..., list:...)");
    sweep->add_option("--threads", cfg.threads, "worker threads (0 = all cores)");
    add_out(sweep);

    auto* verify = app.add_subcommand("verify", "oracle equivalence checks");
    verify->add_option("suite", cfg.suite, "appendix-a | semiclassical | all")
        ->capture_default_str();
    add_profile(verify);
    verify->add_option("--tol", cfg.tol, "integrator tolerance")->capture_default_str();
    verify->add_option("--samples", cfg.samples, "comparison points")->capture_default_str();
    verify->add_option("--tau-end", cfg.tau_end, "end of the compared window");
    verify->add_option("--fault-kappa-scale", cfg.fault_scale)->group("");
    add_out(verify);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kInputError;
    }

    try {
        if (schedule->parsed()) return cmd_schedule(cfg, out, err);
        if (simulate->parsed()) return cmd_simulate(cfg, out, err);
        if (sweep->parsed()) return cmd_sweep(cfg, out, err);
        return cmd_verify(cfg, out, err);
    } catch (const InfeasibleSchedule& e) {
        err << "error: infeasible schedule: " << e.what() << '\n';
        return kInfeasible;
    } catch (const StepFailure& e) {
        err << "error: integrator failure: " << e.what() << '\n';
        return kStepFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    }
}

}  // namespace qmem::cli
