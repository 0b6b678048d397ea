#pragma once

// Fidelity over (kappa_i, r) grids and the loss-dependent optimal input rate.

#include <string>
#include <string_view>
#include <vector>

namespace qmem {

enum class Family { Exponential, Gaussian };

/// "exp" or "gauss"; DomainError otherwise.
Family parse_family(std::string_view name);
std::string family_name(Family family);

struct SweepOptions {
    /// Gaussian lead in units of sigma.
    double gauss_n = 4.0;
    /// Worker threads; 0 uses the hardware concurrency.
    unsigned threads = 0;
    /// Skip the closed forms and use the generic solver everywhere.
    bool generic_only = false;
};

struct SweepCell {
    double kappa_i = 0.0;
    double r = 0.0;
    double fidelity = 0.0;
    double tau_c = 0.0;
    double tau_max = 0.0;
    bool closed_form = true;
    /// Empty unless the cell failed; the numeric fields are NaN then.
    std::string error;

    bool ok() const { return error.empty(); }
};

struct SweepGrid {
    Family family = Family::Exponential;
    double gauss_n = 4.0;
    std::vector<double> kappa_i;
    std::vector<double> r;
    /// Row-major over (kappa_i, r).
    std::vector<SweepCell> cells;
    std::vector<std::string> warnings;

    const SweepCell& at(std::size_t i, std::size_t j) const { return cells.at(i * r.size() + j); }
};

/// One cell: closed form where it applies, generic solver otherwise.
SweepCell evaluate_cell(Family family, double kappa_i, double r, const SweepOptions& opts = {});

/// Cells are independent; the result does not depend on the thread count.
SweepGrid fidelity_surface(Family family, std::vector<double> kappa_i, std::vector<double> r,
                           const SweepOptions& opts = {});

/// 25 log-spaced values over [1e-5, 1e-2].
std::vector<double> default_kappa_i_grid();
/// 40 values over [0.05, 1] plus the family's reference rate (0.036 or 0.1533).
std::vector<double> default_r_grid(Family family);

/// Header kappa_i,r,fidelity,tau_c,tau_max; one row per cell.
std::string surface_csv(const SweepGrid& grid);

struct OptimalRate {
    double r = 0.0;
    double fidelity = 0.0;
    /// The maximizer sits on an end of [r_lo, r_hi].
    bool boundary_maximum = false;
};

/// Golden-section maximization of the fidelity over r in [r_lo, r_hi] to 1e-4.
OptimalRate optimal_rate(Family family, double kappa_i, const SweepOptions& opts = {},
                         double r_lo = 0.05, double r_hi = 1.0);

}  // namespace qmem
