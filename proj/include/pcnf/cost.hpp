#pragma once

#include <string>
#include <vector>

#include "pcnf/interval.hpp"

namespace pcnf {

// Scalar cost C(x) attached to an injection, a compression ratio, or (for the
// current-voltage form) to active power. min_over() returns a certified lower
// bound on a closed interval; it is the exact minimum for every kind except
// polynomials of degree four and above, which fall back to an interval Horner
// enclosure.
class CostFunction {
public:
    enum class Kind { Zero, Affine, Quadratic, Polynomial, PiecewiseLinear, AbsDeviation };

    CostFunction() = default;

    static CostFunction zero();
    static CostFunction affine(double c0, double c1);
    static CostFunction quadratic(double c0, double c1, double c2);
    // coefficients[k] multiplies x^k
    static CostFunction polynomial(std::vector<double> coefficients);
    // Linear interpolation between breakpoints, linear extrapolation outside.
    static CostFunction piecewise_linear(std::vector<double> breakpoints, std::vector<double> values);
    static CostFunction abs_deviation(double weight, double reference);

    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] const std::vector<double>& coefficients() const { return coeffs_; }
    [[nodiscard]] const std::vector<double>& breakpoints() const { return xs_; }
    [[nodiscard]] const std::vector<double>& values() const { return ys_; }
    [[nodiscard]] double weight() const { return weight_; }
    [[nodiscard]] double reference() const { return reference_; }

    [[nodiscard]] double operator()(double x) const;
    [[nodiscard]] double min_over(Interval box) const;
    [[nodiscard]] bool is_zero() const { return kind_ == Kind::Zero; }
    [[nodiscard]] bool is_convex() const;
    [[nodiscard]] bool is_exact_minimum() const;

    // Empty when the parameters are admissible, otherwise a description.
    [[nodiscard]] std::string validate() const;

    [[nodiscard]] static const char* kind_name(Kind k);

private:
    Kind kind_ = Kind::Zero;
    std::vector<double> coeffs_;
    std::vector<double> xs_;
    std::vector<double> ys_;
    double weight_ = 0.0;
    double reference_ = 0.0;
};

}  // namespace pcnf
