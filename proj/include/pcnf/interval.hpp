#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>

namespace pcnf {

// Closed interval [lo, hi] of doubles. Arithmetic is the natural interval
// extension without directed rounding; callers that test feasibility inflate
// by feasibility_slack() instead.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    constexpr Interval() = default;
    constexpr Interval(double value) : lo(value), hi(value) {}  // NOLINT: implicit singleton
    constexpr Interval(double l, double u) : lo(l), hi(u) {}

    [[nodiscard]] constexpr double width() const { return hi - lo; }
    [[nodiscard]] constexpr double mid() const { return 0.5 * (lo + hi); }
    [[nodiscard]] constexpr bool is_singleton() const { return lo == hi; }
    [[nodiscard]] constexpr bool is_empty() const { return !(lo <= hi); }
    [[nodiscard]] constexpr bool contains(double x) const { return lo <= x && x <= hi; }
    [[nodiscard]] constexpr bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
    [[nodiscard]] bool is_finite() const { return std::isfinite(lo) && std::isfinite(hi); }
    [[nodiscard]] double magnitude() const { return std::max(std::abs(lo), std::abs(hi)); }

    // Smallest |x| over the interval.
    [[nodiscard]] constexpr double mignitude() const
    {
        if (lo > 0.0) return lo;
        if (hi < 0.0) return -hi;
        return 0.0;
    }

    [[nodiscard]] Interval inflated(double eps) const { return {lo - eps, hi + eps}; }

    friend constexpr bool operator==(const Interval&, const Interval&) = default;
};

inline Interval operator+(Interval a, Interval b) { return {a.lo + b.lo, a.hi + b.hi}; }
inline Interval operator-(Interval a, Interval b) { return {a.lo - b.hi, a.hi - b.lo}; }
inline Interval operator-(Interval a) { return {-a.hi, -a.lo}; }

inline Interval operator*(Interval a, Interval b)
{
    const double p1 = a.lo * b.lo;
    const double p2 = a.lo * b.hi;
    const double p3 = a.hi * b.lo;
    const double p4 = a.hi * b.hi;
    return {std::min(std::min(p1, p2), std::min(p3, p4)), std::max(std::max(p1, p2), std::max(p3, p4))};
}

inline Interval operator*(double s, Interval a)
{
    return s >= 0.0 ? Interval{s * a.lo, s * a.hi} : Interval{s * a.hi, s * a.lo};
}
inline Interval operator*(Interval a, double s) { return s * a; }

inline Interval& operator+=(Interval& a, Interval b) { return a = a + b; }
inline Interval& operator-=(Interval& a, Interval b) { return a = a - b; }

// Range of x^2, tighter than a*a when the interval straddles zero.
inline Interval sqr(Interval a)
{
    const double l2 = a.lo * a.lo;
    const double h2 = a.hi * a.hi;
    if (a.lo >= 0.0) return {l2, h2};
    if (a.hi <= 0.0) return {h2, l2};
    return {0.0, std::max(l2, h2)};
}

inline Interval abs(Interval a) { return {a.mignitude(), a.magnitude()}; }

inline Interval hull(Interval a, Interval b) { return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)}; }

inline std::optional<Interval> intersect(Interval a, Interval b)
{
    const Interval r{std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
    if (r.is_empty()) return std::nullopt;
    return r;
}

inline bool intersects(Interval a, Interval b) { return std::max(a.lo, b.lo) <= std::min(a.hi, b.hi); }

// Absolute slack used by every interval feasibility test: relative 1e-9 of the
// magnitude involved, plus 1e-12 so that values near zero still get room for
// rounding in the enclosure arithmetic.
inline constexpr double kFeasibilityRelTol = 1e-9;

inline double feasibility_slack(Interval a)
{
    return kFeasibilityRelTol * a.magnitude() + 1e-12;
}

// Do a and b intersect once both are widened by their rounding slack?
inline bool intersects_tol(Interval a, Interval b)
{
    const double eps = feasibility_slack(a) + feasibility_slack(b);
    return std::max(a.lo, b.lo) <= std::min(a.hi, b.hi) + eps;
}

inline std::ostream& operator<<(std::ostream& os, const Interval& a)
{
    return os << '[' << a.lo << ", " << a.hi << ']';
}

}  // namespace pcnf
