#pragma once

// Normalized input intensity profiles r_in(tau). All times are in units of
// 1/kappa_max and all rates in units of kappa_max.

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qmem {

enum class ProfileKind { Exponential, Gaussian, Tabulated };

struct TableSample {
    double tau;
    double rate;
};

class InputProfile {
public:
    /// r * exp(-r tau).
    static InputProfile exponential(double r);

    /// Peak rate r = 1/(sigma sqrt(2 pi)) centred at tau0 = n sigma. Leads
    /// below n = 4 need allow_short_lead; below n = 3 are always rejected.
    static InputProfile gaussian(double peak_rate, double n = 4.0, bool allow_short_lead = false);
    static InputProfile gaussian_with_sigma(double sigma, double n = 4.0,
                                            bool allow_short_lead = false);

    /// Shape-preserving cubic through the samples, zero outside them. No
    /// normalization check happens here; see validate().
    static InputProfile tabulated(std::vector<TableSample> samples);

    ProfileKind kind() const noexcept { return kind_; }
    /// Initial rate (exponential), peak rate (Gaussian) or largest sample.
    double peak_rate() const noexcept { return r_; }
    double sigma() const;
    double lead() const;
    double center() const;
    bool short_lead_allowed() const noexcept { return allow_short_lead_; }
    std::span<const TableSample> samples() const;

    /// r_in(tau); DomainError for tau < 0.
    double rate(double tau) const;
    double sqrt_rate(double tau) const;
    /// Integral of r_in over [0, tau].
    double cumulative(double tau) const;
    /// Integral of r_in over [tau, inf).
    double tail(double tau) const;
    /// 1 minus the mass the profile places on [0, inf).
    double truncation_deficit() const;

    /// End of the root-search window.
    double horizon() const;
    /// Characteristic time over which r_in changes appreciably.
    double time_scale() const;
    /// Points in (a, b) where r_in has reduced smoothness or a narrow feature.
    std::vector<double> breakpoints_in(double a, double b) const;

    std::string literal() const;

private:
    struct Table;

    InputProfile() = default;

    ProfileKind kind_ = ProfileKind::Exponential;
    double r_ = 0.0;
    double sigma_ = 0.0;
    double n_ = 0.0;
    bool allow_short_lead_ = false;
    std::shared_ptr<const Table> table_;
};

/// Adaptive quadrature of r_in over [0, tau_end]; tau_end may be +inf.
double total_excitation(const InputProfile& profile, double tau_end);

struct ValidationReport {
    std::vector<std::string> failures;
    double total_excitation = 0.0;

    bool ok() const noexcept { return failures.empty(); }
};

ValidationReport validate(const InputProfile& profile);

/// Parses `exp:r=0.036`, `gauss:r=0.1533,n=4` or `table:<path.csv>` (CSV with
/// columns tau,r_in).
InputProfile parse_profile_literal(std::string_view literal);

InputProfile load_tabulated_profile(const std::filesystem::path& path);

}  // namespace qmem
