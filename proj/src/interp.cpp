#include "qmem/interp.hpp"

#include <algorithm>
#include <cmath>

#include "qmem/errors.hpp"

namespace qmem::numeric {

namespace {

double sign(double v) { return (v > 0.0) - (v < 0.0); }

double end_slope(double h0, double h1, double d0, double d1) {
    double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (sign(d) != sign(d0)) {
        d = 0.0;
    } else if (sign(d0) != sign(d1) && std::abs(d) > 3.0 * std::abs(d0)) {
        d = 3.0 * d0;
    }
    return d;
}

}  // namespace

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw DomainError("interpolant needs at least two nodes");
    for (std::size_t k = 0; k < n; ++k) {
        if (!std::isfinite(x_[k]) || !std::isfinite(y_[k]))
            throw DomainError("interpolant nodes must be finite");
        if (k > 0 && !(x_[k] > x_[k - 1]))
            throw DomainError("interpolant abscissae must increase strictly");
    }
    slopes_.assign(n, 0.0);
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        h[k] = x_[k + 1] - x_[k];
        delta[k] = (y_[k + 1] - y_[k]) / h[k];
    }
    if (n == 2) {
        slopes_[0] = slopes_[1] = delta[0];
    } else {
        for (std::size_t k = 1; k + 1 < n; ++k) {
            if (sign(delta[k - 1]) * sign(delta[k]) <= 0.0) continue;
            const double w1 = 2.0 * h[k] + h[k - 1];
            const double w2 = h[k] + 2.0 * h[k - 1];
            slopes_[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
        slopes_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
        slopes_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    }
    cumulative_.assign(n, 0.0);
    for (std::size_t k = 0; k + 1 < n; ++k)
        cumulative_[k + 1] = cumulative_[k] + partial_integral(k, 1.0);
}

std::size_t MonotoneCubic::segment(double t) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), t);
    const auto k = static_cast<std::size_t>(it - x_.begin());
    if (k == 0) return 0;
    return std::min(k - 1, x_.size() - 2);
}

double MonotoneCubic::operator()(double t) const {
    if (t <= x_.front()) return y_.front();
    if (t >= x_.back()) return y_.back();
    const std::size_t k = segment(t);
    const double h = x_[k + 1] - x_[k];
    const double s = (t - x_[k]) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y_[k] + (s3 - 2 * s2 + s) * h * slopes_[k] +
           (-2 * s3 + 3 * s2) * y_[k + 1] + (s3 - s2) * h * slopes_[k + 1];
}

// Integral over [x_k, x_k + s h] of segment k.
double MonotoneCubic::partial_integral(std::size_t k, double s) const {
    const double h = x_[k + 1] - x_[k];
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double s4 = s3 * s;
    return h * ((s4 / 2 - s3 + s) * y_[k] + (s4 / 4 - 2 * s3 / 3 + s2 / 2) * h * slopes_[k] +
                (-s4 / 2 + s3) * y_[k + 1] + (s4 / 4 - s3 / 3) * h * slopes_[k + 1]);
}

double MonotoneCubic::integral_to(double t) const {
    if (t <= x_.front()) return 0.0;
    if (t >= x_.back()) return cumulative_.back();
    const std::size_t k = segment(t);
    return cumulative_[k] + partial_integral(k, (t - x_[k]) / (x_[k + 1] - x_[k]));
}

}  // namespace qmem::numeric
