#include "pcnf/cost.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace pcnf {

namespace {

double horner(const std::vector<double>& c, double x)
{
    double r = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * x + *it;
    return r;
}

Interval horner(const std::vector<double>& c, Interval x)
{
    Interval r{0.0};
    for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * x + Interval{*it};
    return r;
}

std::size_t degree(const std::vector<double>& c)
{
    std::size_t d = c.size();
    while (d > 0 && c[d - 1] == 0.0) --d;
    return d == 0 ? 0 : d - 1;
}

}  // namespace

CostFunction CostFunction::zero() { return {}; }

CostFunction CostFunction::affine(double c0, double c1)
{
    CostFunction f;
    f.kind_ = Kind::Affine;
    f.coeffs_ = {c0, c1};
    return f;
}

CostFunction CostFunction::quadratic(double c0, double c1, double c2)
{
    CostFunction f;
    f.kind_ = Kind::Quadratic;
    f.coeffs_ = {c0, c1, c2};
    return f;
}

CostFunction CostFunction::polynomial(std::vector<double> coefficients)
{
    CostFunction f;
    f.kind_ = Kind::Polynomial;
    f.coeffs_ = std::move(coefficients);
    return f;
}

CostFunction CostFunction::piecewise_linear(std::vector<double> breakpoints, std::vector<double> values)
{
    CostFunction f;
    f.kind_ = Kind::PiecewiseLinear;
    f.xs_ = std::move(breakpoints);
    f.ys_ = std::move(values);
    return f;
}

CostFunction CostFunction::abs_deviation(double weight, double reference)
{
    CostFunction f;
    f.kind_ = Kind::AbsDeviation;
    f.weight_ = weight;
    f.reference_ = reference;
    return f;
}

double CostFunction::operator()(double x) const
{
    switch (kind_) {
    case Kind::Zero:
        return 0.0;
    case Kind::Affine:
    case Kind::Quadratic:
    case Kind::Polynomial:
        return horner(coeffs_, x);
    case Kind::PiecewiseLinear: {
        if (xs_.size() == 1) return ys_[0];
        // segment index k covers [xs_[k], xs_[k+1]]; ends extrapolate
        auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
        std::size_t k = it == xs_.begin() ? 0 : static_cast<std::size_t>(it - xs_.begin()) - 1;
        k = std::min(k, xs_.size() - 2);
        const double slope = (ys_[k + 1] - ys_[k]) / (xs_[k + 1] - xs_[k]);
        return ys_[k] + slope * (x - xs_[k]);
    }
    case Kind::AbsDeviation:
        return weight_ * std::abs(x - reference_);
    }
    return 0.0;
}

double CostFunction::min_over(Interval box) const
{
    const double a = box.lo;
    const double b = box.hi;
    switch (kind_) {
    case Kind::Zero:
        return 0.0;
    case Kind::Affine:
    case Kind::Quadratic:
    case Kind::Polynomial: {
        const std::size_t d = degree(coeffs_);
        if (d >= 4) return horner(coeffs_, box).lo;
        double best = std::min(horner(coeffs_, a), horner(coeffs_, b));
        auto consider = [&](double x) {
            if (x > a && x < b) best = std::min(best, horner(coeffs_, x));
        };
        if (d == 2) {
            consider(-coeffs_[1] / (2.0 * coeffs_[2]));
        } else if (d == 3) {
            // stationary points of c1 + 2 c2 x + 3 c3 x^2
            const double qa = 3.0 * coeffs_[3];
            const double qb = 2.0 * coeffs_[2];
            const double qc = coeffs_[1];
            const double disc = qb * qb - 4.0 * qa * qc;
            if (disc >= 0.0) {
                const double s = std::sqrt(disc);
                consider((-qb - s) / (2.0 * qa));
                consider((-qb + s) / (2.0 * qa));
            }
        }
        return best;
    }
    case Kind::PiecewiseLinear: {
        double best = std::min((*this)(a), (*this)(b));
        for (double x : xs_)
            if (x > a && x < b) best = std::min(best, (*this)(x));
        return best;
    }
    case Kind::AbsDeviation: {
        const double dist = reference_ < a ? a - reference_ : (reference_ > b ? reference_ - b : 0.0);
        return weight_ * dist;
    }
    }
    return 0.0;
}

bool CostFunction::is_convex() const
{
    switch (kind_) {
    case Kind::Zero:
    case Kind::Affine:
        return true;
    case Kind::Quadratic:
    case Kind::Polynomial: {
        const std::size_t d = degree(coeffs_);
        return d <= 1 || (d == 2 && coeffs_[2] >= 0.0);
    }
    case Kind::PiecewiseLinear: {
        double prev = -INFINITY;
        for (std::size_t k = 0; k + 1 < xs_.size(); ++k) {
            const double slope = (ys_[k + 1] - ys_[k]) / (xs_[k + 1] - xs_[k]);
            if (slope < prev) return false;
            prev = slope;
        }
        return true;
    }
    case Kind::AbsDeviation:
        return weight_ >= 0.0;
    }
    return false;
}

bool CostFunction::is_exact_minimum() const
{
    if (kind_ == Kind::Quadratic || kind_ == Kind::Polynomial) return degree(coeffs_) <= 3;
    return true;
}

std::string CostFunction::validate() const
{
    for (double c : coeffs_)
        if (!std::isfinite(c)) return "cost coefficients must be finite";
    switch (kind_) {
    case Kind::Affine:
        if (coeffs_.size() != 2) return "affine cost needs two coefficients";
        break;
    case Kind::Quadratic:
        if (coeffs_.size() != 3) return "quadratic cost needs three coefficients";
        break;
    case Kind::Polynomial:
        if (coeffs_.empty()) return "polynomial cost needs at least one coefficient";
        break;
    case Kind::PiecewiseLinear:
        if (xs_.empty() || xs_.size() != ys_.size())
            return "piecewise-linear cost needs matching, nonempty breakpoints and values";
        for (std::size_t k = 0; k < xs_.size(); ++k) {
            if (!std::isfinite(xs_[k]) || !std::isfinite(ys_[k])) return "piecewise-linear data must be finite";
            if (k > 0 && !(xs_[k] > xs_[k - 1])) return "piecewise-linear breakpoints must be strictly increasing";
        }
        break;
    case Kind::AbsDeviation:
        if (!(weight_ >= 0.0) || !std::isfinite(weight_) || !std::isfinite(reference_))
            return "absolute-deviation penalty needs a finite nonnegative weight";
        break;
    case Kind::Zero:
        break;
    }
    return {};
}

const char* CostFunction::kind_name(Kind k)
{
    switch (k) {
    case Kind::Zero: return "zero";
    case Kind::Affine: return "affine";
    case Kind::Quadratic: return "quadratic";
    case Kind::Polynomial: return "polynomial";
    case Kind::PiecewiseLinear: return "piecewise_linear";
    case Kind::AbsDeviation: return "abs_deviation";
    }
    return "?";
}

}  // namespace pcnf
