#include "qmem/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "qmem/closed_form.hpp"
#include "qmem/errors.hpp"
#include "qmem/io.hpp"
#include "qmem/numeric.hpp"
#include "qmem/profile.hpp"
#include "qmem/protocol.hpp"

namespace qmem {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kRateTol = 1e-4;

double reference_rate(Family family) { return family == Family::Exponential ? 0.036 : 0.1533; }

}  // namespace

Family parse_family(std::string_view name) {
    if (name == "exp") return Family::Exponential;
    if (name == "gauss") return Family::Gaussian;
    throw DomainError("unknown profile family '" + std::string(name) + "'");
}

std::string family_name(Family family) {
    return family == Family::Exponential ? "exp" : "gauss";
}

SweepCell evaluate_cell(Family family, double kappa_i, double r, const SweepOptions& opts) {
    SweepCell cell;
    cell.kappa_i = kappa_i;
    cell.r = r;
    try {
        if (family == Family::Exponential && !opts.generic_only && kappa_i < r) {
            const auto c = exp_constants(r, kappa_i);
            const auto pk = exp_report(c);
            cell.tau_c = c.tau_c;
            cell.tau_max = pk.tau_max;
            cell.fidelity = pk.fidelity;
        } else if (family == Family::Gaussian && !opts.generic_only) {
            const auto profile = InputProfile::gaussian(r, opts.gauss_n, true);
            const auto c = gauss_constants(profile.sigma(), opts.gauss_n, kappa_i);
            const auto pk = gauss_report(c);
            cell.tau_c = c.tau_c;
            cell.tau_max = pk.tau_max;
            cell.fidelity = pk.fidelity;
        } else {
            const auto profile = family == Family::Exponential
                                     ? InputProfile::exponential(r)
                                     : InputProfile::gaussian(r, opts.gauss_n, true);
            const auto rep = solve_transfer(profile, MemoryParams{kappa_i});
            cell.closed_form = false;
            cell.tau_c = rep.tau_c;
            cell.tau_max = rep.tau_max;
            cell.fidelity = rep.fidelity;
            if (!rep.peak_found) cell.error = "peak not found";
        }
        if (cell.ok() && !(cell.fidelity >= 0.0 && cell.fidelity <= 1.0))
            cell.error = "fidelity outside [0, 1]";
    } catch (const std::exception& e) {
        cell.error = e.what();
    }
    if (!cell.ok()) cell.fidelity = cell.tau_c = cell.tau_max = kNaN;
    return cell;
}

SweepGrid fidelity_surface(Family family, std::vector<double> kappa_i, std::vector<double> r,
                           const SweepOptions& opts) {
    SweepGrid grid;
    grid.family = family;
    grid.gauss_n = opts.gauss_n;
    grid.kappa_i = std::move(kappa_i);
    grid.r = std::move(r);
    if (grid.kappa_i.empty() || grid.r.empty()) throw DomainError("empty sweep grid");
    for (std::size_t k = 1; k < grid.kappa_i.size(); ++k)
        if (!(grid.kappa_i[k] > grid.kappa_i[k - 1]))
            throw DomainError("kappa_i grid must increase strictly");
    for (std::size_t k = 1; k < grid.r.size(); ++k)
        if (!(grid.r[k] > grid.r[k - 1])) throw DomainError("r grid must increase strictly");
    if (grid.kappa_i.front() <= 0.0 || grid.kappa_i.back() > 1e-2)
        grid.warnings.push_back("kappa_i grid extends beyond (0, 1e-2]");
    const bool r_outside = std::any_of(grid.r.begin(), grid.r.end(), [&](double r) {
        return (r < 0.05 || r > 1.0) && r != reference_rate(family);
    });
    if (r_outside) grid.warnings.push_back("r grid extends beyond [0.05, 1]");

    const std::size_t n = grid.kappa_i.size() * grid.r.size();
    grid.cells.resize(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t idx = next++; idx < n; idx = next++) {
            const std::size_t i = idx / grid.r.size();
            const std::size_t j = idx % grid.r.size();
            grid.cells[idx] = evaluate_cell(family, grid.kappa_i[i], grid.r[j], opts);
        }
    };
    unsigned threads = opts.threads != 0 ? opts.threads : std::thread::hardware_concurrency();
    threads = static_cast<unsigned>(std::clamp<std::size_t>(threads, 1, n));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return grid;
}

std::vector<double> default_kappa_i_grid() { return numeric::logspace(1e-5, 1e-2, 25); }

std::vector<double> default_r_grid(Family family) {
    auto r = numeric::linspace(0.05, 1.0, 40);
    r.push_back(reference_rate(family));
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    return r;
}

std::string surface_csv(const SweepGrid& grid) {
    io::CsvWriter w({"kappa_i", "r", "fidelity", "tau_c", "tau_max"});
    for (const auto& c : grid.cells) w.add_row({c.kappa_i, c.r, c.fidelity, c.tau_c, c.tau_max});
    return w.str();
}

OptimalRate optimal_rate(Family family, double kappa_i, const SweepOptions& opts, double r_lo,
                         double r_hi) {
    if (!(kappa_i > 0.0)) throw DomainError("kappa_i must be positive");
    if (!(r_lo > 0.0 && r_hi > r_lo && r_hi <= 1.0)) throw DomainError("bad rate interval");
    auto f = [&](double r) {
        const auto cell = evaluate_cell(family, kappa_i, r, opts);
        return cell.ok() ? cell.fidelity : -1.0;
    };
    OptimalRate best;
    best.r = numeric::golden_section_max(f, r_lo, r_hi, kRateTol);
    best.fidelity = f(best.r);
    best.boundary_maximum = best.r - r_lo <= 2.0 * kRateTol || r_hi - best.r <= 2.0 * kRateTol;
    return best;
}

}  // namespace qmem
