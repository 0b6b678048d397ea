#pragma once

// Two-stage optimal transfer for an arbitrary input profile: charge the
// memory at kappa_max until its population reaches r_in / kappa_max, then
// follow the zero-reflection coupling kappa = r_in / beta^2.

#include <span>
#include <string>
#include <vector>

#include "qmem/profile.hpp"

namespace qmem {

struct MemoryParams {
    /// Intrinsic loss rate as a fraction of kappa_max, in [0, 1).
    double kappa_i = 0.0;

    /// Throws DomainError unless 0 <= kappa_i < 1.
    void validate() const;
};

enum class Stage {
    Charging,        ///< kappa = kappa_max, reflection not yet cancelled
    ZeroReflection,  ///< kappa = r_in / beta^2
};

struct ScheduleSegment {
    Stage stage;
    double begin;
    double end;  ///< +inf for the final segment
};

enum class FeasibilityPolicy {
    /// Fall back to charging wherever the zero-reflection coupling would
    /// exceed kappa_max, and look for the next threshold crossing.
    Reenter,
    /// Throw InfeasibleSchedule instead.
    Reject,
};

struct ScheduleOptions {
    FeasibilityPolicy policy = FeasibilityPolicy::Reenter;
    /// Checkpoint / scan spacing; 0 picks 0.05 * min(1, profile time scale).
    double step = 0.0;
};

class CouplingSchedule {
public:
    const InputProfile& profile() const noexcept { return profile_; }
    double kappa_i() const noexcept { return kappa_i_; }
    /// First threshold time.
    double tau_c() const noexcept { return segments_.at(1).info.begin; }
    std::vector<ScheduleSegment> segments() const;
    /// True when the feasibility guard inserted a later charging segment.
    bool reentered() const noexcept { return segments_.size() > 2; }

    double kappa(double tau) const;
    /// Memory amplitude beta(tau) <= 0 under this schedule.
    double amplitude(double tau) const;
    double population(double tau) const;
    /// (beta sqrt(kappa) + sqrt(r_in))^2.
    double reflection_rate(double tau) const;
    /// d(beta^2)/dtau = r_in - kappa_i beta^2 - r_out.
    double population_rate(double tau) const;
    /// Segment boundaries in (a, b).
    std::vector<double> breakpoints_in(double a, double b) const;

    double step() const noexcept { return step_; }

private:
    friend CouplingSchedule build_schedule(const InputProfile&, const MemoryParams&,
                                           const ScheduleOptions&);

    struct Segment {
        ScheduleSegment info;
        // Charging: amplitude at each checkpoint; zero-reflection: population.
        std::vector<double> values;
    };

    CouplingSchedule(InputProfile profile, double kappa_i, double step)
        : profile_(std::move(profile)), kappa_i_(kappa_i), step_(step) {}

    const Segment& segment_at(double tau) const;
    double state_at(const Segment& seg, double tau) const;

    InputProfile profile_;
    double kappa_i_;
    double step_;
    std::vector<Segment> segments_;
};

struct TransferReport {
    double tau_c = 0.0;
    /// +inf for kappa_i = 0 (population keeps growing).
    double tau_max = 0.0;
    double fidelity = 0.0;
    double loss_stage1_reflection = 0.0;
    double loss_intrinsic = 0.0;
    /// Input arriving after tau_max plus mass truncated before tau = 0.
    double loss_unabsorbed = 0.0;

    bool feasibility_guard_triggered = false;
    bool peak_found = true;
    std::vector<std::string> notes;

    double loss_total() const {
        return loss_stage1_reflection + loss_intrinsic + loss_unabsorbed;
    }
};

/// Stage-1 amplitude at kappa = kappa_max starting from an empty memory.
double stage1_amplitude(const InputProfile& profile, const MemoryParams& params, double tau);

/// First tau_c > 0 where the charging population reaches r_in(tau_c).
/// Throws NoThreshold when none exists before the profile horizon.
double threshold_time(const InputProfile& profile, const MemoryParams& params,
                      double step = 0.0);

/// Zero-reflection population from beta^2(tau_c) = r_in(tau_c).
double stage2_population(const InputProfile& profile, const MemoryParams& params, double tau_c,
                         double tau);

CouplingSchedule build_schedule(const InputProfile& profile, const MemoryParams& params,
                                const ScheduleOptions& opts = {});

TransferReport peak_time_and_fidelity(const InputProfile& profile, const MemoryParams& params,
                                      const CouplingSchedule& schedule);

/// build_schedule followed by peak_time_and_fidelity.
TransferReport solve_transfer(const InputProfile& profile, const MemoryParams& params,
                              const ScheduleOptions& opts = {});

/// Sample grid of n uniform points on [0, tau_end] plus every segment boundary.
std::vector<double> schedule_grid(const CouplingSchedule& schedule, std::size_t n, double tau_end);

/// CSV with columns tau,kappa,r_in,beta1_sq,beta_sq,r_out.
std::string schedule_csv(const CouplingSchedule& schedule, std::span<const double> grid);

/// JSON object with keys tau_c,tau_max,fidelity,loss_stage1_reflection,
/// loss_intrinsic,loss_unabsorbed; infinite tau_max is written as "inf".
std::string report_json(const TransferReport& report);

}  // namespace qmem
