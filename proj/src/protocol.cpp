#include "qmem/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qmem/errors.hpp"
#include "qmem/io.hpp"
#include "qmem/numeric.hpp"

namespace qmem {

namespace {

using numeric::kInf;

constexpr double kFeasibilitySlack = 1e-9;
constexpr std::size_t kMaxSegments = 512;
constexpr int kPeakExtensions = 6;

double default_step(const InputProfile& profile) {
    return 0.05 * std::min(1.0, profile.time_scale());
}

numeric::QuadratureOptions propagation_quadrature(const InputProfile& profile) {
    numeric::QuadratureOptions q;
    q.max_chunk = std::min(profile.time_scale(), 5.0);
    return q;
}

// Amplitude at t under kappa = 1 starting from beta0 at t0.
double charge(const InputProfile& profile, double kappa_i, double t0, double beta0, double t) {
    if (t <= t0) return beta0;
    const double c = 0.5 * (1.0 + kappa_i);
    auto f = [&](double s) { return std::exp(-c * (t - s)) * profile.sqrt_rate(s); };
    const auto bps = profile.breakpoints_in(t0, t);
    return beta0 * std::exp(-c * (t - t0)) -
           numeric::integrate(f, t0, t, bps, propagation_quadrature(profile));
}

// Population at t under zero reflection starting from p0 at t0.
double relax(const InputProfile& profile, double kappa_i, double t0, double p0, double t) {
    if (t <= t0) return p0;
    auto f = [&](double s) { return std::exp(-kappa_i * (t - s)) * profile.rate(s); };
    const auto bps = profile.breakpoints_in(t0, t);
    return p0 * std::exp(-kappa_i * (t - t0)) +
           numeric::integrate(f, t0, t, bps, propagation_quadrature(profile));
}

numeric::RootOptions root_options(double tau, double rel) {
    numeric::RootOptions o;
    o.x_tol = rel * std::max(1.0, std::abs(tau));
    return o;
}

struct ChargingScan {
    std::vector<double> values;
    double end = kInf;
};

// Marches the charging dynamics from (t0, beta0) in steps of h and stops at the
// first point where beta^2 climbs through r_in.
ChargingScan scan_charging(const InputProfile& profile, double kappa_i, double t0, double beta0,
                           double h) {
    ChargingScan scan;
    scan.values.push_back(beta0);
    const double horizon = profile.horizon();
    double t = t0;
    double beta = beta0;
    double f_prev = profile.sqrt_rate(t) + beta;
    for (std::size_t k = 1; t < horizon; ++k) {
        const double tn = t0 + static_cast<double>(k) * h;
        const double bn = charge(profile, kappa_i, t, beta, tn);
        const double fn = profile.sqrt_rate(tn) + bn;
        if (f_prev > 0.0 && fn <= 0.0) {
            auto g = [&](double s) {
                return profile.sqrt_rate(s) + charge(profile, kappa_i, t, beta, s);
            };
            scan.end = numeric::find_root(g, t, tn, f_prev, fn, root_options(tn, 1e-14));
            return scan;
        }
        scan.values.push_back(bn);
        t = tn;
        beta = bn;
        f_prev = fn;
    }
    return scan;
}

}  // namespace

void MemoryParams::validate() const {
    if (!(kappa_i >= 0.0 && kappa_i < 1.0))
        throw DomainError("kappa_i must lie in [0, 1)");
}

double stage1_amplitude(const InputProfile& profile, const MemoryParams& params, double tau) {
    params.validate();
    if (tau < 0.0) throw DomainError("tau must be non-negative");
    return std::min(0.0, charge(profile, params.kappa_i, 0.0, 0.0, tau));
}

double threshold_time(const InputProfile& profile, const MemoryParams& params, double step) {
    params.validate();
    const double h = step > 0.0 ? step : default_step(profile);
    const auto scan = scan_charging(profile, params.kappa_i, 0.0, 0.0, h);
    if (!std::isfinite(scan.end))
        throw NoThreshold("charging never reaches the threshold population before the horizon");
    return scan.end;
}

double stage2_population(const InputProfile& profile, const MemoryParams& params, double tau_c,
                         double tau) {
    params.validate();
    if (tau < tau_c) throw DomainError("tau must not precede tau_c");
    return relax(profile, params.kappa_i, tau_c, profile.rate(tau_c), tau);
}

CouplingSchedule build_schedule(const InputProfile& profile, const MemoryParams& params,
                                const ScheduleOptions& opts) {
    params.validate();
    const double h = opts.step > 0.0 ? opts.step : default_step(profile);
    const double ki = params.kappa_i;
    const double horizon = profile.horizon();
    CouplingSchedule schedule(profile, ki, h);

    double t0 = 0.0;
    double beta0 = 0.0;
    while (true) {
        auto scan = scan_charging(profile, ki, t0, beta0, h);
        if (!std::isfinite(scan.end)) {
            if (schedule.segments_.empty())
                throw NoThreshold(
                    "charging never reaches the threshold population before the horizon");
            schedule.segments_.push_back({{Stage::Charging, t0, kInf}, std::move(scan.values)});
            break;
        }
        const double tc = scan.end;
        schedule.segments_.push_back({{Stage::Charging, t0, tc}, std::move(scan.values)});

        std::vector<double> pops{profile.rate(tc)};
        double t = tc;
        double p = pops.front();
        double violation = kInf;
        for (std::size_t k = 1; t < horizon; ++k) {
            const double tn = tc + static_cast<double>(k) * h;
            const double pn = relax(profile, ki, t, p, tn);
            if (profile.rate(tn) > (1.0 + kFeasibilitySlack) * pn) {
                auto q = [&](double s) { return relax(profile, ki, t, p, s) - profile.rate(s); };
                const double q_lo = q(t);
                const double q_hi = q(tn);
                violation = q_lo <= 0.0 ? t
                                        : numeric::find_root(q, t, tn, q_lo, q_hi,
                                                             root_options(tn, 1e-14));
                break;
            }
            pops.push_back(pn);
            t = tn;
            p = pn;
        }
        if (!std::isfinite(violation)) {
            schedule.segments_.push_back({{Stage::ZeroReflection, tc, kInf}, std::move(pops)});
            break;
        }
        if (opts.policy == FeasibilityPolicy::Reject) {
            std::ostringstream msg;
            msg << "zero-reflection coupling exceeds kappa_max at tau = "
                << io::format_double(violation);
            throw InfeasibleSchedule(msg.str(), violation);
        }
        const double pv = relax(profile, ki, t, p, violation);
        schedule.segments_.push_back(
            {{Stage::ZeroReflection, tc, violation}, std::move(pops)});
        if (schedule.segments_.size() >= kMaxSegments)
            throw InfeasibleSchedule("feasibility guard did not converge", violation);
        t0 = violation;
        beta0 = -std::sqrt(pv);
    }
    return schedule;
}

std::vector<ScheduleSegment> CouplingSchedule::segments() const {
    std::vector<ScheduleSegment> out;
    out.reserve(segments_.size());
    for (const auto& s : segments_) out.push_back(s.info);
    return out;
}

const CouplingSchedule::Segment& CouplingSchedule::segment_at(double tau) const {
    if (tau < 0.0) throw DomainError("tau must be non-negative");
    auto it = std::upper_bound(segments_.begin(), segments_.end(), tau,
                               [](double t, const Segment& s) { return t < s.info.begin; });
    return *std::prev(it);
}

double CouplingSchedule::state_at(const Segment& seg, double tau) const {
    const double offset = (tau - seg.info.begin) / step_;
    const auto last = static_cast<double>(seg.values.size() - 1);
    const auto k = static_cast<std::size_t>(std::clamp(std::floor(offset), 0.0, last));
    const double tk = seg.info.begin + static_cast<double>(k) * step_;
    if (seg.info.stage == Stage::Charging)
        return std::min(0.0, charge(profile_, kappa_i_, tk, seg.values[k], tau));
    if (tau - tk > step_) {
        // Past the last checkpoint (beyond the horizon). Treating the leftover
        // input as undamped errs by at most tail(tk) (1 - e^{-kappa_i (tau - tk)}).
        const double fed = profile_.tail(tk) - profile_.tail(tau);
        return (seg.values[k] + fed) * std::exp(-kappa_i_ * (tau - tk));
    }
    return relax(profile_, kappa_i_, tk, seg.values[k], tau);
}

double CouplingSchedule::kappa(double tau) const {
    const auto& seg = segment_at(tau);
    if (seg.info.stage == Stage::Charging) return 1.0;
    const double p = state_at(seg, tau);
    return profile_.rate(tau) / p;
}

double CouplingSchedule::amplitude(double tau) const {
    const auto& seg = segment_at(tau);
    const double s = state_at(seg, tau);
    return seg.info.stage == Stage::Charging ? s : -std::sqrt(s);
}

double CouplingSchedule::population(double tau) const {
    const auto& seg = segment_at(tau);
    const double s = state_at(seg, tau);
    return seg.info.stage == Stage::Charging ? s * s : s;
}

double CouplingSchedule::reflection_rate(double tau) const {
    const auto& seg = segment_at(tau);
    const double s = state_at(seg, tau);
    const double sr = profile_.sqrt_rate(tau);
    if (seg.info.stage == Stage::Charging) return (s + sr) * (s + sr);
    const double beta = -std::sqrt(s);
    const double a = beta * std::sqrt(profile_.rate(tau) / s) + sr;
    return a * a;
}

double CouplingSchedule::population_rate(double tau) const {
    return profile_.rate(tau) - kappa_i_ * population(tau) - reflection_rate(tau);
}

std::vector<double> CouplingSchedule::breakpoints_in(double a, double b) const {
    std::vector<double> out;
    for (const auto& s : segments_)
        if (s.info.begin > a && s.info.begin < b) out.push_back(s.info.begin);
    return out;
}

TransferReport peak_time_and_fidelity(const InputProfile& profile, const MemoryParams& params,
                                      const CouplingSchedule& schedule) {
    params.validate();
    const double ki = params.kappa_i;
    TransferReport rep;
    rep.tau_c = schedule.tau_c();
    rep.feasibility_guard_triggered = schedule.reentered();
    if (rep.feasibility_guard_triggered)
        rep.notes.push_back("feasibility guard re-entered charging after the first threshold");

    const auto segments = schedule.segments();
    const bool ends_absorbing = segments.back().stage == Stage::ZeroReflection;

    if (ki == 0.0 && ends_absorbing) {
        const double start = segments.back().begin;
        rep.tau_max = kInf;
        rep.fidelity = schedule.population(start) + profile.tail(start);
    } else {
        auto g = [&](double s) { return schedule.population_rate(s); };
        double lo = rep.tau_c;
        double hi = std::max(profile.horizon(), lo + schedule.step());
        std::optional<numeric::Bracket> br;
        for (int ext = 0; ext <= kPeakExtensions && !br; ++ext) {
            br = numeric::first_downward_crossing(g, lo, hi, schedule.step());
            if (!br) {
                lo = hi;
                hi *= 2.0;
            }
        }
        if (br) {
            rep.tau_max = numeric::find_root(g, br->lo, br->hi, br->f_lo, br->f_hi,
                                             root_options(br->hi, 1e-13));
        } else {
            rep.peak_found = false;
            rep.tau_max = lo;
            rep.notes.push_back("population still rising at the end of the search window");
        }
        rep.fidelity = schedule.population(rep.tau_max);
    }
    if (ki >= profile.peak_rate() && profile.kind() == ProfileKind::Exponential)
        rep.notes.push_back("kappa_i >= r: peak located numerically");

    const auto q = propagation_quadrature(profile);
    for (const auto& s : segments) {
        if (s.stage != Stage::Charging) continue;
        const double b = std::min(s.end, rep.tau_max);
        if (!(b > s.begin) || !std::isfinite(b)) continue;
        auto f = [&](double t) { return schedule.reflection_rate(t); };
        rep.loss_stage1_reflection +=
            numeric::integrate(f, s.begin, b, profile.breakpoints_in(s.begin, b), q);
    }
    if (ki > 0.0 && std::isfinite(rep.tau_max)) {
        auto f = [&](double t) { return schedule.population(t); };
        auto bps = schedule.breakpoints_in(0.0, rep.tau_max);
        const auto pb = profile.breakpoints_in(0.0, rep.tau_max);
        bps.insert(bps.end(), pb.begin(), pb.end());
        std::sort(bps.begin(), bps.end());
        rep.loss_intrinsic = ki * numeric::integrate(f, 0.0, rep.tau_max, bps, q);
    }
    rep.loss_unabsorbed = (std::isfinite(rep.tau_max) ? profile.tail(rep.tau_max) : 0.0) +
                          profile.truncation_deficit();
    return rep;
}

TransferReport solve_transfer(const InputProfile& profile, const MemoryParams& params,
                              const ScheduleOptions& opts) {
    const auto schedule = build_schedule(profile, params, opts);
    return peak_time_and_fidelity(profile, params, schedule);
}

std::vector<double> schedule_grid(const CouplingSchedule& schedule, std::size_t n,
                                  double tau_end) {
    auto grid = numeric::linspace(0.0, tau_end, std::max<std::size_t>(n, 2));
    for (double b : schedule.breakpoints_in(0.0, tau_end)) grid.push_back(b);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

std::string schedule_csv(const CouplingSchedule& schedule, std::span<const double> grid) {
    io::CsvWriter w({"tau", "kappa", "r_in", "beta1_sq", "beta_sq", "r_out"});
    const auto& p = schedule.profile();
    for (double t : grid) {
        w.add_row({t, schedule.kappa(t), p.rate(t), std::max(0.0, 1.0 - p.cumulative(t)),
                   schedule.population(t), schedule.reflection_rate(t)});
    }
    return w.str();
}

std::string report_json(const TransferReport& r) {
    auto num = [](double x) {
        return std::isinf(x) && x > 0 ? std::string("\"inf\"") : io::format_double(x);
    };
    std::ostringstream os;
    os << "{\n"
       << "  \"tau_c\": " << num(r.tau_c) << ",\n"
       << "  \"tau_max\": " << num(r.tau_max) << ",\n"
       << "  \"fidelity\": " << num(r.fidelity) << ",\n"
       << "  \"loss_stage1_reflection\": " << num(r.loss_stage1_reflection) << ",\n"
       << "  \"loss_intrinsic\": " << num(r.loss_intrinsic) << ",\n"
       << "  \"loss_unabsorbed\": " << num(r.loss_unabsorbed) << "\n"
       << "}\n";
    return os.str();
}

}  // namespace qmem
