#pragma once

// Dormand-Prince 5(4) with the standard fourth-order continuous extension.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "qmem/errors.hpp"

namespace qmem::ode {

struct Options {
    double rtol = 1e-10;
    double atol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    std::size_t max_steps = 5'000'000;
};

struct Stats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
};

template <std::size_t N>
class DormandPrince {
public:
    using State = std::array<double, N>;
    using Rhs = std::function<void(double, const State&, State&)>;
    using Observer = std::function<void(double, const State&)>;

    DormandPrince(Rhs rhs, Options opts) : f_(std::move(rhs)), opts_(opts) {}

    /// Integrates from (t0, y0) and reports the state at every output time
    /// (ascending, >= t0). Steps never cross a breakpoint, so discontinuities
    /// in the right-hand side there cost no accuracy.
    Stats solve(double t0, State y0, std::span<const double> outputs,
                std::span<const double> breakpoints, const Observer& observe) {
        Stats stats;
        if (outputs.empty()) return stats;
        std::vector<double> stops;
        for (double b : breakpoints)
            if (b > t0 && b < outputs.back()) stops.push_back(b);
        stops.push_back(outputs.back());
        std::sort(stops.begin(), stops.end());
        stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

        std::size_t next = 0;
        while (next < outputs.size() && outputs[next] <= t0) observe(outputs[next++], y0);

        double t = t0;
        State y = y0;
        double h = 0.0;
        for (double stop : stops) {
            if (!(stop > t)) continue;
            State k1;
            f_(t, y, k1);
            if (h <= 0.0 || h > stop - t) h = initial_step(t, y, k1, stop);
            while (t < stop) {
                if (stats.accepted + stats.rejected >= opts_.max_steps)
                    throw StepFailure("step budget exhausted", t);
                bool last = false;
                if (t + h >= stop || t + 1.01 * h >= stop) {
                    h = stop - t;
                    last = true;
                }
                const double err = step(t, y, k1, h);
                if (!std::isfinite(err)) {
                    ++stats.rejected;
                    h *= 0.25;
                } else if (err <= 1.0) {
                    ++stats.accepted;
                    const double t_new = last ? stop : t + h;
                    while (next < outputs.size() && outputs[next] <= t_new) {
                        const double tq = outputs[next++];
                        observe(tq, dense(t, h, tq));
                    }
                    t = t_new;
                    y = y_new_;
                    k1 = k7_;
                    const double fac = std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
                    h = std::min(h * (err == 0.0 ? 5.0 : fac), opts_.max_step);
                    if (last) break;
                } else {
                    ++stats.rejected;
                    h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
                }
                if (h < 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)))
                    throw StepFailure("step size underflow at tau = " + std::to_string(t), t);
            }
        }
        while (next < outputs.size()) observe(outputs[next++], y);
        return stats;
    }

private:
    double initial_step(double t, const State& y, const State& k1, double stop) const {
        double d0 = 0.0, d1 = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sc = opts_.atol + opts_.rtol * std::abs(y[i]);
            d0 += (y[i] / sc) * (y[i] / sc);
            d1 += (k1[i] / sc) * (k1[i] / sc);
        }
        d0 = std::sqrt(d0 / N);
        d1 = std::sqrt(d1 / N);
        double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h = std::min({h, opts_.max_step, stop - t});
        return std::max(h, 1e-12 * std::max(1.0, std::abs(t)));
    }

    // One trial step; fills y_new_, k7_ and the dense-output coefficients.
    double step(double t, const State& y, const State& k1, double h) {
        static constexpr double a21 = 1.0 / 5, a31 = 3.0 / 40, a32 = 9.0 / 40, a41 = 44.0 / 45,
                                a42 = -56.0 / 15, a43 = 32.0 / 9, a51 = 19372.0 / 6561,
                                a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729,
                                a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                                a64 = 49.0 / 176, a65 = -5103.0 / 18656, a71 = 35.0 / 384,
                                a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                                a76 = 11.0 / 84;
        static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                                e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
        static constexpr double d1 = -12715105075.0 / 11282082432.0,
                                d3 = 87487479700.0 / 32700410799.0,
                                d4 = -10690763975.0 / 1880347072.0,
                                d5 = 701980252875.0 / 199316789632.0,
                                d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

        State k2, k3, k4, k5, k6, tmp;
        for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * a21 * k1[i];
        f_(t + h / 5, tmp, k2);
        for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        f_(t + 3 * h / 10, tmp, k3);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        f_(t + 4 * h / 5, tmp, k4);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        f_(t + 8 * h / 9, tmp, k5);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                                 a65 * k5[i]);
        f_(t + h, tmp, k6);
        for (std::size_t i = 0; i < N; ++i)
            y_new_[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] +
                                    a76 * k6[i]);
        f_(t + h, y_new_, k7_);

        double err = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                  e6 * k6[i] + e7 * k7_[i]);
            const double sc =
                opts_.atol + opts_.rtol * std::max(std::abs(y[i]), std::abs(y_new_[i]));
            err += (e / sc) * (e / sc);
        }
        for (std::size_t i = 0; i < N; ++i) {
            const double dy = y_new_[i] - y[i];
            const double bspl = h * k1[i] - dy;
            c0_[i] = y[i];
            c1_[i] = dy;
            c2_[i] = bspl;
            c3_[i] = dy - h * k7_[i] - bspl;
            c4_[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] +
                          d7 * k7_[i]);
        }
        return std::sqrt(err / N);
    }

    State dense(double t, double h, double tq) const {
        const double s = (tq - t) / h;
        const double s1 = 1.0 - s;
        State out;
        for (std::size_t i = 0; i < N; ++i)
            out[i] = c0_[i] + s * (c1_[i] + s1 * (c2_[i] + s * (c3_[i] + s1 * c4_[i])));
        return out;
    }

    Rhs f_;
    Options opts_;
    State y_new_{}, k7_{};
    State c0_{}, c1_{}, c2_{}, c3_{}, c4_{};
};

}  // namespace qmem::ode
