#include "qmem/profile.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>

#include "qmem/errors.hpp"
#include "qmem/interp.hpp"
#include "qmem/io.hpp"
#include "qmem/numeric.hpp"

namespace qmem {

namespace {

constexpr double kSqrt2Pi = 2.5066282746310002;

}  // namespace

struct InputProfile::Table {
    std::vector<TableSample> nodes;
    numeric::MonotoneCubic curve;

    static numeric::MonotoneCubic make_curve(const std::vector<TableSample>& s) {
        std::vector<double> x(s.size()), y(s.size());
        for (std::size_t k = 0; k < s.size(); ++k) {
            x[k] = s[k].tau;
            y[k] = s[k].rate;
        }
        return {std::move(x), std::move(y)};
    }

    explicit Table(std::vector<TableSample> s) : nodes(std::move(s)), curve(make_curve(nodes)) {}

    double value(double tau) const {
        if (tau < nodes.front().tau || tau > nodes.back().tau) return 0.0;
        return curve(tau);
    }
    double integral_to(double tau) const { return curve.integral_to(tau); }
    double total() const { return curve.total(); }
};

InputProfile InputProfile::exponential(double r) {
    if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("exponential profile needs r > 0");
    InputProfile p;
    p.kind_ = ProfileKind::Exponential;
    p.r_ = r;
    return p;
}

InputProfile InputProfile::gaussian(double peak_rate, double n, bool allow_short_lead) {
    if (!(peak_rate > 0.0) || !std::isfinite(peak_rate)) {
        throw DomainError("gaussian profile needs r > 0");
    }
    return gaussian_with_sigma(1.0 / (peak_rate * kSqrt2Pi), n, allow_short_lead);
}

InputProfile InputProfile::gaussian_with_sigma(double sigma, double n, bool allow_short_lead) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("gaussian profile needs sigma > 0");
    if (!(n >= 3.0)) throw DomainError("gaussian lead n must be at least 3");
    if (n < 4.0 && !allow_short_lead) {
        throw DomainError("gaussian lead n below 4 requires an explicit override");
    }
    InputProfile p;
    p.kind_ = ProfileKind::Gaussian;
    p.sigma_ = sigma;
    p.r_ = 1.0 / (sigma * kSqrt2Pi);
    p.n_ = n;
    p.allow_short_lead_ = allow_short_lead;
    return p;
}

InputProfile InputProfile::tabulated(std::vector<TableSample> samples) {
    if (samples.size() < 2) throw DomainError("tabulated profile needs at least 2 samples");
    for (std::size_t k = 0; k < samples.size(); ++k) {
        if (!std::isfinite(samples[k].tau) || !std::isfinite(samples[k].rate)) {
            throw DomainError("tabulated profile has a non-finite sample");
        }
        if (samples[k].tau < 0.0) throw DomainError("tabulated profile has a negative time");
        if (k > 0 && !(samples[k].tau > samples[k - 1].tau)) {
            throw DomainError("tabulated sample times must be strictly increasing");
        }
    }
    InputProfile p;
    p.kind_ = ProfileKind::Tabulated;
    p.r_ = std::max_element(samples.begin(), samples.end(), [](const auto& a, const auto& b) {
               return a.rate < b.rate;
           })->rate;
    p.table_ = std::make_shared<const Table>(std::move(samples));
    return p;
}

double InputProfile::sigma() const {
    if (kind_ != ProfileKind::Gaussian) throw DomainError("sigma is defined for Gaussian profiles only");
    return sigma_;
}

double InputProfile::lead() const {
    if (kind_ != ProfileKind::Gaussian) throw DomainError("lead is defined for Gaussian profiles only");
    return n_;
}

double InputProfile::center() const { return lead() * sigma_; }

std::span<const TableSample> InputProfile::samples() const {
    if (!table_) return {};
    return table_->nodes;
}

double InputProfile::rate(double tau) const {
    if (tau < 0.0 || std::isnan(tau)) throw DomainError("r_in evaluated at negative time");
    switch (kind_) {
        case ProfileKind::Exponential:
            return r_ * std::exp(-r_ * tau);
        case ProfileKind::Gaussian: {
            const double z = (tau - n_ * sigma_) / sigma_;
            return r_ * std::exp(-0.5 * z * z);
        }
        case ProfileKind::Tabulated:
            return std::max(0.0, table_->value(tau));
    }
    return 0.0;
}

double InputProfile::sqrt_rate(double tau) const { return std::sqrt(rate(tau)); }

double InputProfile::cumulative(double tau) const {
    if (tau <= 0.0) return 0.0;
    switch (kind_) {
        case ProfileKind::Exponential:
            return -std::expm1(-r_ * tau);
        case ProfileKind::Gaussian: {
            const double s = sigma_ * std::numbers::sqrt2;
            return 0.5 * (std::erf((tau - n_ * sigma_) / s) + std::erf(n_ / std::numbers::sqrt2));
        }
        case ProfileKind::Tabulated:
            return table_->integral_to(tau);
    }
    return 0.0;
}

double InputProfile::tail(double tau) const {
    tau = std::max(tau, 0.0);
    switch (kind_) {
        case ProfileKind::Exponential:
            return std::exp(-r_ * tau);
        case ProfileKind::Gaussian:
            return 0.5 * std::erfc((tau - n_ * sigma_) / (sigma_ * std::numbers::sqrt2));
        case ProfileKind::Tabulated:
            return table_->total() - table_->integral_to(tau);
    }
    return 0.0;
}

double InputProfile::truncation_deficit() const {
    switch (kind_) {
        case ProfileKind::Exponential:
            return 0.0;
        case ProfileKind::Gaussian:
            return 0.5 * std::erfc(n_ / std::numbers::sqrt2);
        case ProfileKind::Tabulated:
            return 1.0 - table_->total();
    }
    return 0.0;
}

double InputProfile::horizon() const {
    switch (kind_) {
        case ProfileKind::Exponential:
            return 50.0 / r_;
        case ProfileKind::Gaussian:
            return (n_ + 10.0) * sigma_;
        case ProfileKind::Tabulated:
            return table_->nodes.back().tau;
    }
    return 0.0;
}

double InputProfile::time_scale() const {
    switch (kind_) {
        case ProfileKind::Exponential:
            return 1.0 / r_;
        case ProfileKind::Gaussian:
            return sigma_;
        case ProfileKind::Tabulated: {
            const auto& nodes = table_->nodes;
            return (nodes.back().tau - nodes.front().tau) / 20.0;
        }
    }
    return 1.0;
}

std::vector<double> InputProfile::breakpoints_in(double a, double b) const {
    std::vector<double> out;
    switch (kind_) {
        case ProfileKind::Exponential:
            break;
        case ProfileKind::Gaussian: {
            const double tau0 = n_ * sigma_;
            for (int k = -static_cast<int>(n_); k <= 10; ++k) {
                const double x = tau0 + k * sigma_;
                if (x > a && x < b) out.push_back(x);
            }
            break;
        }
        case ProfileKind::Tabulated: {
            const auto& nodes = table_->nodes;
            auto it = std::upper_bound(nodes.begin(), nodes.end(), a,
                                       [](double t, const TableSample& s) { return t < s.tau; });
            for (; it != nodes.end() && it->tau < b; ++it) out.push_back(it->tau);
            break;
        }
    }
    return out;
}

std::string InputProfile::literal() const {
    switch (kind_) {
        case ProfileKind::Exponential:
            return "exp:r=" + io::format_double(r_);
        case ProfileKind::Gaussian:
            return "gauss:r=" + io::format_double(r_) + ",n=" + io::format_double(n_);
        case ProfileKind::Tabulated:
            return "table:<" + std::to_string(table_->nodes.size()) + " samples>";
    }
    return {};
}

double total_excitation(const InputProfile& profile, double tau_end) {
    if (tau_end < 0.0) throw DomainError("total_excitation: negative end time");
    if (tau_end == 0.0) return 0.0;
    const double finite_end = std::min(tau_end, profile.horizon());
    numeric::QuadratureOptions opts;
    opts.rel_tol = 1e-13;
    opts.max_chunk = std::min(profile.time_scale(), 5.0);
    auto f = [&profile](double t) { return profile.rate(t); };
    const auto cuts = profile.breakpoints_in(0.0, finite_end);
    double total = numeric::integrate(f, 0.0, finite_end, cuts, opts);
    if (tau_end > finite_end) total += numeric::integrate(f, finite_end, tau_end, {}, opts);
    return total;
}

ValidationReport validate(const InputProfile& profile) {
    ValidationReport report;
    switch (profile.kind()) {
        case ProfileKind::Exponential:
            report.total_excitation = total_excitation(profile, numeric::kInf);
            if (std::abs(report.total_excitation - 1.0) > 1e-6) {
                report.failures.push_back("normalization: total excitation " +
                                          io::format_double(report.total_excitation));
            }
            break;
        case ProfileKind::Gaussian: {
            if (profile.lead() < 4.0 && !profile.short_lead_allowed()) {
                report.failures.push_back("lead: n below 4 without override");
            }
            report.total_excitation = total_excitation(profile, numeric::kInf);
            const double allowed = 0.5 * std::erfc(profile.lead() / std::numbers::sqrt2) + 1e-9;
            const double deficit = 1.0 - report.total_excitation;
            if (deficit > allowed || deficit < -1e-9) {
                report.failures.push_back("normalization: total excitation " +
                                          io::format_double(report.total_excitation));
            }
            break;
        }
        case ProfileKind::Tabulated: {
            for (const auto& s : profile.samples()) {
                if (s.rate < 0.0) {
                    report.failures.push_back("nonnegativity: r_in(" + io::format_double(s.tau) +
                                              ") = " + io::format_double(s.rate));
                    break;
                }
            }
            report.total_excitation = total_excitation(profile, numeric::kInf);
            if (std::abs(report.total_excitation - 1.0) > 1e-6) {
                report.failures.push_back("normalization: total excitation " +
                                          io::format_double(report.total_excitation));
            }
            break;
        }
    }
    return report;
}

InputProfile load_tabulated_profile(const std::filesystem::path& path) {
    const auto table = io::read_csv(path);
    const auto tau = table.column("tau");
    const auto rate = table.column("r_in");
    std::vector<TableSample> samples(tau.size());
    for (std::size_t i = 0; i < tau.size(); ++i) samples[i] = {tau[i], rate[i]};
    return InputProfile::tabulated(std::move(samples));
}

InputProfile parse_profile_literal(std::string_view literal) {
    const auto colon = literal.find(':');
    if (colon == std::string_view::npos) {
        throw DomainError("profile literal must look like kind:args, got '" + std::string(literal) + "'");
    }
    const std::string_view kind = literal.substr(0, colon);
    const std::string_view rest = literal.substr(colon + 1);
    if (kind == "table") {
        if (rest.empty()) throw DomainError("table profile needs a CSV path");
        return load_tabulated_profile(std::filesystem::path(std::string(rest)));
    }

    std::map<std::string, double, std::less<>> args;
    std::size_t pos = 0;
    while (pos <= rest.size()) {
        const auto comma = rest.find(',', pos);
        const auto item = rest.substr(pos, comma == std::string_view::npos ? std::string_view::npos
                                                                          : comma - pos);
        const auto eq = item.find('=');
        if (eq == std::string_view::npos || eq == 0) {
            throw DomainError("malformed profile argument '" + std::string(item) + "'");
        }
        const std::string key(item.substr(0, eq));
        if (args.contains(key)) throw DomainError("duplicate profile argument '" + key + "'");
        args[key] = io::parse_double(item.substr(eq + 1));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    auto take = [&](std::string_view key) -> std::optional<double> {
        auto it = args.find(key);
        if (it == args.end()) return std::nullopt;
        const double v = it->second;
        args.erase(it);
        return v;
    };
    auto check_done = [&] {
        if (!args.empty()) throw DomainError("unknown profile argument '" + args.begin()->first + "'");
    };

    if (kind == "exp") {
        const auto r = take("r");
        if (!r) throw DomainError("exp profile needs r=<rate>");
        check_done();
        return InputProfile::exponential(*r);
    }
    if (kind == "gauss") {
        const auto r = take("r");
        const auto sigma = take("sigma");
        const double n = take("n").value_or(4.0);
        check_done();
        if (r && sigma) throw DomainError("gauss profile takes r or sigma, not both");
        if (sigma) return InputProfile::gaussian_with_sigma(*sigma, n);
        if (!r) throw DomainError("gauss profile needs r=<peak rate>");
        return InputProfile::gaussian(*r, n);
    }
    throw DomainError("unknown profile kind '" + std::string(kind) + "'");
}

}  // namespace qmem
