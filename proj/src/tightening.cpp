#include "pcnf/tightening.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "pcnf/discretization.hpp"
#include "pcnf/errors.hpp"

namespace pcnf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const Interval kWhole{-kInf, kInf};

// Directed rounding through error-free transformations: the result is the
// rounded-to-nearest value, moved one ulp outward only when it is inexact
// on the wrong side.
double add_dn(double a, double b)
{
    const double s = a + b;
    if (!std::isfinite(s)) return s;
    const double bb = s - a;
    const double err = (a - (s - bb)) + (b - bb);
    return err < 0.0 ? std::nextafter(s, -kInf) : s;
}

double add_up(double a, double b)
{
    const double s = a + b;
    if (!std::isfinite(s)) return s;
    const double bb = s - a;
    const double err = (a - (s - bb)) + (b - bb);
    return err > 0.0 ? std::nextafter(s, kInf) : s;
}

double mul_dn(double a, double b)
{
    const double p = a * b;
    if (!std::isfinite(p)) return p;
    return std::fma(a, b, -p) < 0.0 ? std::nextafter(p, -kInf) : p;
}

double mul_up(double a, double b)
{
    const double p = a * b;
    if (!std::isfinite(p)) return p;
    return std::fma(a, b, -p) > 0.0 ? std::nextafter(p, kInf) : p;
}

// a / b for b > 0
double div_dn(double a, double b)
{
    const double q = a / b;
    if (!std::isfinite(q)) return q;
    return std::fma(-q, b, a) < 0.0 ? std::nextafter(q, -kInf) : q;
}

double div_up(double a, double b)
{
    const double q = a / b;
    if (!std::isfinite(q)) return q;
    return std::fma(-q, b, a) > 0.0 ? std::nextafter(q, kInf) : q;
}

double widen_dn(double x, int ulps)
{
    for (int k = 0; k < ulps; ++k) x = std::nextafter(x, -kInf);
    return x;
}

double widen_up(double x, int ulps)
{
    for (int k = 0; k < ulps; ++k) x = std::nextafter(x, kInf);
    return x;
}

Interval meet(Interval a, Interval b) { return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)}; }

Interval empty_interval() { return {kInf, -kInf}; }

// Outward sum and difference.
Interval plus(Interval a, Interval b) { return {add_dn(a.lo, b.lo), add_up(a.hi, b.hi)}; }
Interval minus(Interval a, Interval b) { return {add_dn(a.lo, -b.hi), add_up(a.hi, -b.lo)}; }

Interval widened(Interval a) { return a.inflated(feasibility_slack(a)); }

// Preimage of a flow interval under the potential-difference law of a
// monotone edge: the potential differences D with law(D) in phi.
Interval difference_preimage(const Physics& physics, Interval phi)
{
    if (const auto* g = std::get_if<GasWeymouth>(&physics)) {
        // phi = gamma sign(D) sqrt|D|  <=>  D = (phi / gamma) |phi / gamma|
        const double ulo = div_dn(phi.lo, g->gamma), uhi = div_up(phi.hi, g->gamma);
        return {mul_dn(ulo, std::abs(ulo)), mul_up(uhi, std::abs(uhi))};
    }
    const auto* d = std::get_if<Dissipative>(&physics);
    if (d == nullptr) return kWhole;
    const MonotoneLaw& law = d->law;
    if (law.kind == MonotoneLaw::Kind::Power) {
        auto inv = [&](double f) {
            if (f == 0.0 || !std::isfinite(f)) return f;
            return std::copysign(std::pow(std::abs(f) / law.coefficient, 1.0 / law.exponent), f);
        };
        // pow is not correctly rounded; a few ulps plus a relative margin covers it
        const double lo = inv(phi.lo), hi = inv(phi.hi);
        return {widen_dn(lo - 1e-14 * std::abs(lo), 4), widen_up(hi + 1e-14 * std::abs(hi), 4)};
    }
    // Nondecreasing piecewise-linear table with linear extrapolation: bisect
    // for the first point reaching phi.lo and the last point not above phi.hi.
    auto first_at_least = [&](double y) {
        if (!std::isfinite(y)) return y < 0 ? -kInf : kInf;
        double lo = law.xs.front(), hi = law.xs.back();
        double span = std::max(1.0, hi - lo);
        for (int k = 0; k < 200 && law(lo) >= y; ++k) lo -= span, span *= 2.0;
        if (law(lo) >= y) return -kInf;
        span = std::max(1.0, hi - lo);
        for (int k = 0; k < 200 && law(hi) < y; ++k) hi += span, span *= 2.0;
        if (law(hi) < y) return kInf;
        for (int k = 0; k < 200 && std::nextafter(lo, kInf) < hi; ++k) {
            const double mid = 0.5 * (lo + hi);
            (law(mid) >= y ? hi : lo) = mid;
        }
        return lo;
    };
    auto last_at_most = [&](double y) {
        if (!std::isfinite(y)) return y < 0 ? -kInf : kInf;
        double lo = law.xs.front(), hi = law.xs.back();
        double span = std::max(1.0, hi - lo);
        for (int k = 0; k < 200 && law(hi) <= y; ++k) hi += span, span *= 2.0;
        if (law(hi) <= y) return kInf;
        span = std::max(1.0, hi - lo);
        for (int k = 0; k < 200 && law(lo) > y; ++k) lo -= span, span *= 2.0;
        if (law(lo) > y) return -kInf;
        for (int k = 0; k < 200 && std::nextafter(lo, kInf) < hi; ++k) {
            const double mid = 0.5 * (lo + hi);
            (law(mid) <= y ? lo : hi) = mid;
        }
        return hi;
    };
    // the interpolant itself is rounded: allow a relative margin on the flow side
    const double m = 1e-12 * std::max({1.0, std::abs(phi.lo), std::abs(phi.hi)});
    return {first_at_least(phi.lo - m), last_at_most(phi.hi + m)};
}

// Superset of the values of scope position `pos` over the exact constraint
// set, given the other positions in `x`. kWhole when no projection is known.
Interval project(const FactorGraph& gm, std::size_t fi, const std::vector<Interval>& x, std::size_t pos)
{
    const FactorNode& f = gm.factors[fi];
    if (gm.components != 1) return kWhole;
    switch (f.kind) {
    case FactorKind::Cost:
        return kWhole;

    case FactorKind::NodeLaw: {
        const bool has_q = !f.blocks.empty() && gm.blocks[f.blocks[0]].kind == BlockKind::Injection;
        const std::size_t first = has_q ? 1 : 0;
        const std::size_t ends = (x.size() - first) / 2;
        Interval out = kWhole;
        if (f.conservation && has_q) {
            // q = sum of outgoing flows
            auto sum_flows = [&](std::size_t skip) {
                Interval s{0.0};
                for (std::size_t e = 0; e < ends; ++e)
                    if (first + 2 * e + 1 != skip) s = plus(s, x[first + 2 * e + 1]);
                return s;
            };
            if (pos == 0) out = meet(out, sum_flows(npos));
            else if ((pos - first) % 2 == 1) out = meet(out, minus(x[0], sum_flows(pos)));
        }
        if (pos >= first && (pos - first) % 2 == 0) {
            for (std::size_t e = 0; e < ends; ++e)
                if (first + 2 * e != pos) out = meet(out, x[first + 2 * e]);
        }
        return out;
    }

    case FactorKind::EdgeLaw: {
        const EdgeSpec& e = gm.net.edges[gm.links[f.link].index];
        if (!physics_is_monotone(e.physics)) return kWhole;
        // scope: pi_a, phi_ab, pi_b, phi_ba with phi_ab = F(pi_a, pi_b) = -phi_ba
        const Interval phi = meet(x[1], -x[3]);
        if (phi.is_empty()) return empty_interval();
        switch (pos) {
        case 1:
        case 3: {
            const Interval F = widened(edge_flow_enclosure(e, {&x[0], 1}, {&x[2], 1}, Direction::Forward)[0]);
            return pos == 1 ? meet(F, -x[3]) : meet(-F, -x[1]);
        }
        default: {
            const Interval D = difference_preimage(e.physics, phi);
            const double off = std::holds_alternative<GasWeymouth>(e.physics) ? std::get<GasWeymouth>(e.physics).offset
                                                                              : 0.0;
            // D = pi_a - pi_b + off
            if (pos == 0) return minus(plus(D, x[2]), Interval{off});
            return minus(plus(x[0], Interval{off}), D);
        }
        }
    }

    case FactorKind::Transform: {
        const Link& l = gm.links[f.link];
        const TransformSpec& spec = *gm.net.nodes[l.index].transform;
        // scope: pi_in, phi_io, pi_out, phi_oi [, ratio]
        if (pos == 1) return -x[3];
        if (pos == 3) return -x[1];
        std::optional<Interval> ratio;
        if (l.ratio != npos) ratio = x[4];
        if (spec.kind == TransformSpec::Kind::Additive) {
            const Interval c{spec.coefficient.at(0)};
            return pos == 2 ? plus(x[0], c) : minus(x[2], c);
        }
        if (spec.kind != TransformSpec::Kind::Multiplicative) {
            if (pos == 2) return widened(transform_enclosure(spec, {&x[0], 1}, ratio)[0]);
            return kWhole;
        }
        const Interval a = ratio.value_or(Interval{spec.coefficient.empty() ? 1.0 : spec.coefficient[0]});
        if (pos == 2) {
            const double c[4] = {mul_dn(x[0].lo, a.lo), mul_dn(x[0].lo, a.hi), mul_dn(x[0].hi, a.lo),
                                 mul_dn(x[0].hi, a.hi)};
            const double d[4] = {mul_up(x[0].lo, a.lo), mul_up(x[0].lo, a.hi), mul_up(x[0].hi, a.lo),
                                 mul_up(x[0].hi, a.hi)};
            return {*std::min_element(c, c + 4), *std::max_element(d, d + 4)};
        }
        if (pos == 0 && a.lo > 0.0) {
            // pi_in = pi_out / alpha over all corners
            const double c[4] = {div_dn(x[2].lo, a.lo), div_dn(x[2].lo, a.hi), div_dn(x[2].hi, a.lo),
                                 div_dn(x[2].hi, a.hi)};
            const double d[4] = {div_up(x[2].lo, a.lo), div_up(x[2].lo, a.hi), div_up(x[2].hi, a.lo),
                                 div_up(x[2].hi, a.hi)};
            return {*std::min_element(c, c + 4), *std::max_element(d, d + 4)};
        }
        return kWhole;
    }

    case FactorKind::Aggregator: {
        // |q_pos + rest| <= upper
        const AggregatorSpec& g = gm.net.aggregators[f.aggregator];
        if (!std::isfinite(g.upper)) return kWhole;
        Interval rest{0.0};
        for (std::size_t k = 0; k < x.size(); ++k)
            if (k != pos) rest = plus(rest, x[k]);
        return minus(Interval{-g.upper, g.upper}, rest);
    }
    }
    return kWhole;
}

std::vector<Interval> cells_of(Interval d, std::size_t m)
{
    if (!std::isfinite(d.lo) || !std::isfinite(d.hi) || d.is_singleton()) return {d};
    const std::vector<double> br = partition_uniform(d, m);
    std::vector<Interval> out;
    for (std::size_t k = 0; k + 1 < br.size(); ++k) out.emplace_back(br[k], br[k + 1]);
    return out;
}

// Is there a cell choice for the other scope positions under which the
// factor test does not refute the box? Depth-first with partial boxes.
class LocalSearch {
public:
    LocalSearch(const FactorGraph& gm, std::size_t f, std::vector<std::vector<Interval>> cells, std::size_t budget)
        : gm_(gm), f_(f), cells_(std::move(cells)), budget_(budget)
    {
    }

    bool feasible(std::vector<Interval> box, std::size_t fixed)
    {
        box_ = std::move(box);
        fixed_ = fixed;
        used_ = 0;
        if (gm_.test(f_, box_) == Verdict::Infeasible) return false;
        return visit(0);
    }

private:
    bool visit(std::size_t k)
    {
        if (k == box_.size()) return true;
        if (k == fixed_ || cells_[k].size() == 1) return visit(k + 1);
        const Interval saved = box_[k];
        for (const Interval& c : cells_[k]) {
            if (++used_ > budget_) return true;  // out of budget: keep the cell
            box_[k] = c;
            if (gm_.test(f_, box_) != Verdict::Infeasible && visit(k + 1)) {
                box_[k] = saved;
                return true;
            }
        }
        box_[k] = saved;
        return false;
    }

    const FactorGraph& gm_;
    std::size_t f_;
    std::vector<std::vector<Interval>> cells_;
    std::size_t budget_;
    std::vector<Interval> box_;
    std::size_t fixed_ = 0;
    std::size_t used_ = 0;
};

}  // namespace

BoundsState BoundsState::from(const FactorGraph& gm)
{
    BoundsState s;
    s.bounds = gm.domains();
    s.original = s.bounds;
    return s;
}

Interval tighten_once(const FactorGraph& gm, const std::vector<Interval>& bounds, std::size_t var,
                      const TighteningOptions& opt)
{
    if (opt.resolution < 2) throw InputError("tightening resolution must be at least 2");
    if (var >= gm.num_scalars() || bounds.size() != gm.num_scalars()) throw InputError("tighten_once: bad variable");
    Interval result = bounds[var];
    if (result.is_empty()) return result;
    const std::size_t block = gm.scalars[var].block;

    std::vector<Interval> mine = cells_of(bounds[var], opt.resolution);
    std::vector<char> alive(mine.size(), 1);
    for (std::size_t f : gm.block_factors[block]) {
        if (!gm.is_constraint(f)) continue;
        const std::vector<std::size_t> scope = gm.scope(f);
        const std::size_t pos = static_cast<std::size_t>(std::find(scope.begin(), scope.end(), var) - scope.begin());
        std::vector<Interval> box;
        std::vector<std::vector<Interval>> cells;
        for (std::size_t s : scope) {
            box.push_back(bounds[s]);
            cells.push_back(cells_of(bounds[s], opt.resolution));
        }
        if (opt.projections) {
            result = meet(result, project(gm, f, box, pos));
            if (result.is_empty()) return empty_interval();
        }
        LocalSearch search(gm, f, std::move(cells), opt.query_budget);
        for (std::size_t c = 0; c < mine.size(); ++c) {
            if (!alive[c]) continue;
            box[pos] = mine[c];
            alive[c] = search.feasible(box, pos) ? 1 : 0;
        }
    }
    Interval hull = empty_interval();
    for (std::size_t c = 0; c < mine.size(); ++c)
        if (alive[c]) hull = {std::min(hull.lo, mine[c].lo), std::max(hull.hi, mine[c].hi)};
    if (hull.is_empty()) return empty_interval();
    return meet(result, hull);
}

BoundsState tighten_all(const FactorGraph& gm, BoundsState state, const TighteningOptions& opt)
{
    if (opt.max_sweeps < 1) throw InputError("tightening needs at least one sweep");
    if (opt.resolution < 2) throw InputError("tightening resolution must be at least 2");
    if (state.bounds.size() != gm.num_scalars()) throw InputError("bounds do not match the graph");
    if (state.original.empty()) state.original = state.bounds;
    std::vector<std::size_t> order(gm.num_scalars());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return gm.scalars[a].name < gm.scalars[b].name; });

    auto move = [](Interval a, Interval b) {
        const double dl = a.lo == b.lo ? 0.0 : std::abs(a.lo - b.lo);
        const double dh = a.hi == b.hi ? 0.0 : std::abs(a.hi - b.hi);
        return std::max(dl, dh);
    };

    std::size_t threads = opt.threads != 0 ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, std::max<std::size_t>(1, order.size() / 8));

    state.converged = false;
    for (std::size_t sweep = 0; sweep < opt.max_sweeps; ++sweep) {
        const std::vector<Interval> prev = state.bounds;
        std::vector<Interval>& next = state.bounds;
        if (opt.schedule == SweepSchedule::Jacobi && threads > 1) {
            // every task reads only `prev` and writes its own slot
            std::vector<std::thread> pool;
            for (std::size_t w = 0; w < threads; ++w)
                pool.emplace_back([&, w] {
                    for (std::size_t k = w; k < order.size(); k += threads)
                        next[order[k]] = meet(tighten_once(gm, prev, order[k], opt), prev[order[k]]);
                });
            for (std::thread& t : pool) t.join();
        } else {
            for (std::size_t v : order) {
                const std::vector<Interval>& source = opt.schedule == SweepSchedule::Jacobi ? prev : next;
                next[v] = meet(tighten_once(gm, source, v, opt), prev[v]);
                if (next[v].is_empty()) break;
            }
        }
        for (std::size_t v : order)
            if (next[v].is_empty())
                throw InfeasibleError(InfeasibilityKind::Local,
                                      "locally infeasible: domain of " + gm.scalars[v].name + " became empty");
        double change = 0.0;
        for (std::size_t v = 0; v < next.size(); ++v) {
            if (!prev[v].contains(next[v])) throw Error("tightening broke nesting at " + gm.scalars[v].name);
            change = std::max(change, move(prev[v], next[v]));
        }
        ++state.sweeps;
        state.change.push_back(change);
        if (change < opt.tol) {
            state.converged = true;
            break;
        }
    }
    return state;
}

std::vector<Interval> tighten_global_bruteforce(const FactorGraph& gm, const std::vector<Interval>& bounds,
                                                std::size_t resolution)
{
    if (gm.num_blocks() > 4) throw InputError("global tightening is limited to graphs with at most 4 blocks");
    if (resolution < 1) throw InputError("global tightening resolution must be positive");
    const std::size_t n = gm.num_scalars();
    std::vector<std::vector<Interval>> cells(n);
    for (std::size_t s = 0; s < n; ++s) cells[s] = cells_of(bounds[s], resolution);
    std::vector<std::vector<std::size_t>> scopes(gm.num_factors()), touch(n);
    for (std::size_t f = 0; f < gm.num_factors(); ++f) {
        scopes[f] = gm.scope(f);
        if (gm.is_constraint(f))
            for (std::size_t s : scopes[f]) touch[s].push_back(f);
    }
    std::vector<Interval> box = bounds;
    std::vector<Interval> hull(n, empty_interval());
    auto passes = [&](std::size_t s) {
        for (std::size_t f : touch[s]) {
            std::vector<Interval> fb;
            for (std::size_t v : scopes[f]) fb.push_back(box[v]);
            if (gm.test(f, fb) == Verdict::Infeasible) return false;
        }
        return true;
    };
    std::size_t tests = 0;
    auto visit = [&](auto&& self, std::size_t s) -> void {
        if (s == n) {
            for (std::size_t v = 0; v < n; ++v)
                hull[v] = {std::min(hull[v].lo, box[v].lo), std::max(hull[v].hi, box[v].hi)};
            return;
        }
        for (const Interval& c : cells[s]) {
            if (++tests > 50'000'000) throw CapacityError("global tightening exceeded its test budget");
            box[s] = c;
            if (passes(s)) self(self, s + 1);
        }
        box[s] = bounds[s];
    };
    visit(visit, 0);
    return hull;
}

}  // namespace pcnf
