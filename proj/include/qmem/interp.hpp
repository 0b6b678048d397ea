#pragma once

#include <span>
#include <vector>

namespace qmem::numeric {

/// Shape-preserving piecewise-cubic Hermite interpolant (Fritsch-Carlson
/// interior slopes, three-point end slopes) with exact running integrals.
class MonotoneCubic {
public:
    /// Needs at least two nodes with strictly increasing x; DomainError otherwise.
    MonotoneCubic(std::vector<double> x, std::vector<double> y);

    std::span<const double> x() const noexcept { return x_; }
    std::span<const double> y() const noexcept { return y_; }

    /// Interpolated value; end values are held outside the node range.
    double operator()(double t) const;
    /// Integral from the first node to t, clamped to the node range.
    double integral_to(double t) const;
    double total() const noexcept { return cumulative_.back(); }

private:
    std::size_t segment(double t) const;
    double partial_integral(std::size_t k, double s) const;

    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> slopes_;
    std::vector<double> cumulative_;
};

}  // namespace qmem::numeric
