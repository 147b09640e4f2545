#include "pcnf/oracle.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

#include "pcnf/errors.hpp"

namespace pcnf {

namespace {

constexpr std::size_t kDefaultCap = 10'000'000;

[[noreturn]] void too_large() { throw CapacityError("instance too large for oracle"); }

double slack_of(Interval a) { return kFeasibilityRelTol * std::max(std::abs(a.lo), std::abs(a.hi)) + 1e-12; }

double forward_flow(const EdgeSpec& e, double pi_from, double pi_to)
{
    const double a[1] = {pi_from}, b[1] = {pi_to};
    return edge_flow(e, a, b, Direction::Forward)[0];
}

void require_supported(const FactorGraph& gm)
{
    if (gm.components != 1) throw InputError("oracle supports single-component networks only");
    for (const Link& l : gm.links) {
        if (l.kind != LinkKind::Edge) continue;
        if (!physics_is_monotone(gm.net.edges[l.index].physics))
            throw InputError("oracle supports monotone edge physics only (gas, dissipative)");
    }
}

// Range of the forward flow over a potential box. The flow increases with
// the sending potential and decreases with the receiving one, so two corners
// give the exact range.
Interval flow_range(const EdgeSpec& e, Interval from, Interval to)
{
    return {forward_flow(e, from.lo, to.hi), forward_flow(e, from.hi, to.lo)};
}

Interval transform_range(const TransformSpec& spec, Interval in, std::optional<Interval> ratio)
{
    switch (spec.kind) {
    case TransformSpec::Kind::Multiplicative: {
        const Interval a = ratio.value_or(Interval{spec.coefficient.empty() ? 1.0 : spec.coefficient[0]});
        const double c[4] = {a.lo * in.lo, a.lo * in.hi, a.hi * in.lo, a.hi * in.hi};
        return {*std::min_element(c, c + 4), *std::max_element(c, c + 4)};
    }
    case TransformSpec::Kind::Additive:
        return {in.lo + spec.coefficient.at(0), in.hi + spec.coefficient.at(0)};
    case TransformSpec::Kind::Tabulated: {
        const double lo_in[1] = {in.lo}, hi_in[1] = {in.hi};
        const double y0 = apply_transform(spec, lo_in)[0], y1 = apply_transform(spec, hi_in)[0];
        Interval r{std::min(y0, y1), std::max(y0, y1)};
        for (std::size_t k = 0; k < spec.table_x.size(); ++k) {
            if (spec.table_x[k] > in.lo && spec.table_x[k] < in.hi) {
                r.lo = std::min(r.lo, spec.table_y[k]);
                r.hi = std::max(r.hi, spec.table_y[k]);
            }
        }
        return r;
    }
    }
    return in;
}

// 0 in [lo, hi] once widened by the rounding slack of the accumulated terms.
bool zero_within(double lo, double hi, double mag)
{
    const double eps = kFeasibilityRelTol * mag + 1e-12;
    return lo - eps <= 0.0 && 0.0 <= hi + eps;
}

bool accepts(const FactorGraph& gm, std::size_t fi, const std::vector<Interval>& x)
{
    const FactorNode& f = gm.factors[fi];
    switch (f.kind) {
    case FactorKind::Cost:
        return true;
    case FactorKind::NodeLaw: {
        const bool has_q = !f.blocks.empty() && gm.blocks[f.blocks[0]].kind == BlockKind::Injection;
        const std::size_t first = has_q ? 1 : 0;
        const std::size_t ends = (x.size() - first) / 2;
        if (f.conservation && has_q) {
            double lo = x[0].lo, hi = x[0].hi, mag = x[0].magnitude();
            for (std::size_t e = 0; e < ends; ++e) {
                const Interval& phi = x[first + 2 * e + 1];
                lo -= phi.hi;
                hi -= phi.lo;
                mag += phi.magnitude();
            }
            if (!zero_within(lo, hi, mag)) return false;
        }
        if (ends < 2) return true;
        double lo = -INFINITY, hi = INFINITY, eps = 0.0;
        for (std::size_t e = 0; e < ends; ++e) {
            const Interval& pi = x[first + 2 * e];
            lo = std::max(lo, pi.lo);
            hi = std::min(hi, pi.hi);
            eps = std::max(eps, slack_of(pi));
        }
        return lo <= hi + 2.0 * eps;
    }
    case FactorKind::EdgeLaw: {
        const EdgeSpec& e = gm.net.edges[gm.links[f.link].index];
        const Interval F = flow_range(e, x[0], x[2]);
        const double lo = std::max({F.lo, x[1].lo, -x[3].hi});
        const double hi = std::min({F.hi, x[1].hi, -x[3].lo});
        return lo <= hi + slack_of(F) + slack_of(x[1]) + slack_of(x[3]);
    }
    case FactorKind::Transform: {
        const Link& l = gm.links[f.link];
        std::optional<Interval> ratio;
        if (l.ratio != npos) ratio = x[4];
        const Interval T = transform_range(*gm.net.nodes[l.index].transform, x[0], ratio);
        if (std::max(T.lo, x[2].lo) > std::min(T.hi, x[2].hi) + slack_of(T) + slack_of(x[2])) return false;
        return zero_within(x[1].lo + x[3].lo, x[1].hi + x[3].hi, x[1].magnitude() + x[3].magnitude());
    }
    case FactorKind::Aggregator: {
        const AggregatorSpec& g = gm.net.aggregators[f.aggregator];
        double lo = 0.0, hi = 0.0, mag = 0.0;
        for (const Interval& q : x) {
            lo += q.lo;
            hi += q.hi;
            mag += q.magnitude();
        }
        const double amin = (lo <= 0.0 && 0.0 <= hi) ? 0.0 : std::min(std::abs(lo), std::abs(hi));
        const double amax = std::max(std::abs(lo), std::abs(hi));
        const double eps = kFeasibilityRelTol * std::max(mag, g.lower) + 1e-12;
        return amax + eps >= g.lower && amin <= g.upper + eps;
    }
    }
    return true;
}

double cost_floor(const FactorGraph& gm, std::size_t fi, const std::vector<Interval>& x)
{
    double total = 0.0;
    for (const CostTerm& t : gm.factors[fi].costs) {
        switch (t.kind) {
        case CostTerm::Kind::Unary:
            total += t.fn.min_over(x[t.pos[0]]);
            break;
        case CostTerm::Kind::AbsResidual: {
            double lo = x[t.pos[0]].lo, hi = x[t.pos[0]].hi;
            for (std::size_t p = 1; p < t.pos.size(); ++p) {
                lo -= x[t.pos[p]].hi;
                hi -= x[t.pos[p]].lo;
            }
            total += t.weight * ((lo <= 0.0 && 0.0 <= hi) ? 0.0 : std::min(std::abs(lo), std::abs(hi)));
            break;
        }
        default:
            throw InputError("oracle does not model AC cost terms");
        }
    }
    return total;
}

// Scalars in search order. Chord flows come first, then leaves-up along a
// spanning tree rooted at the slack, each node's injection followed by the
// flows on its parent link, so that each node law closes right after its
// last scalar is placed. Potentials come last, top-down, where each edge law
// pins the next potential given its neighbour's.
std::vector<std::size_t> search_order(const FactorGraph& gm)
{
    const std::size_t n = gm.net.nodes.size();
    std::vector<std::vector<std::size_t>> incident(n);
    for (std::size_t l = 0; l < gm.links.size(); ++l) {
        incident[gm.links[l].a].push_back(l);
        incident[gm.links[l].b].push_back(l);
    }
    std::vector<std::size_t> order;
    std::vector<char> placed(gm.num_scalars(), 0);
    auto place_block = [&](std::size_t b, std::size_t from, std::size_t count) {
        const auto& sc = gm.blocks[b].scalars;
        for (std::size_t k = from; k < std::min(sc.size(), from + count); ++k)
            if (!placed[sc[k]]) placed[sc[k]] = 1, order.push_back(sc[k]);
    };
    const std::size_t K = gm.components;
    auto place_flows = [&](std::size_t l) {
        place_block(gm.links[l].end_ab, K, K);
        place_block(gm.links[l].end_ba, K, K);
        if (gm.links[l].ratio != npos) place_block(gm.links[l].ratio, 0, 1);
    };

    // breadth-first spanning forest, slack components first
    std::vector<std::size_t> roots, bfs, parent_link(n, npos);
    for (std::size_t i = 0; i < n; ++i)
        if (gm.injection_block[i] == npos) roots.push_back(i);
    for (std::size_t i = 0; i < n; ++i) roots.push_back(i);
    std::vector<char> visited(n, 0), tree_link(gm.links.size(), 0);
    for (std::size_t r : roots) {
        if (visited[r]) continue;
        std::deque<std::size_t> queue{r};
        visited[r] = 1;
        while (!queue.empty()) {
            const std::size_t v = queue.front();
            queue.pop_front();
            bfs.push_back(v);
            for (std::size_t l : incident[v]) {
                const std::size_t u = gm.links[l].a == v ? gm.links[l].b : gm.links[l].a;
                if (visited[u]) continue;
                visited[u] = 1;
                parent_link[u] = l;
                tree_link[l] = 1;
                queue.push_back(u);
            }
        }
    }
    for (std::size_t l = 0; l < gm.links.size(); ++l)
        if (!tree_link[l]) place_flows(l);
    for (auto it = bfs.rbegin(); it != bfs.rend(); ++it) {
        if (gm.injection_block[*it] != npos) place_block(gm.injection_block[*it], 0, K);
        if (parent_link[*it] != npos) place_flows(parent_link[*it]);
    }
    for (std::size_t v : bfs)
        for (std::size_t l : incident[v]) place_block(gm.links[l].a == v ? gm.links[l].end_ab : gm.links[l].end_ba, 0, K);
    for (std::size_t s = 0; s < gm.num_scalars(); ++s)
        if (!placed[s]) order.push_back(s);
    return order;
}

// Depth-first branch and bound over cells. Every scalar keeps a contiguous
// range of candidate cells; after each choice the ranges are narrowed until
// each constraint accepts the hull of its scope at both ends of every range.
// The acceptance test is monotone under box inclusion, so narrowing never
// drops a cell that belongs to a complete accepted assignment.
class DiscreteSearch {
public:
    DiscreteSearch(const FactorGraph& gm, const Partition& p, std::size_t cap)
        : gm_(gm), p_(p), cap_(cap), order_(search_order(gm)), touch_(gm.num_scalars())
    {
        scopes_.resize(gm.num_factors());
        for (std::size_t f = 0; f < gm.num_factors(); ++f) {
            scopes_[f] = gm.scope(f);
            for (std::size_t s : scopes_[f]) touch_[s].push_back(f);
        }
        // Cells of scalars with their own cost are tried cheapest first.
        cell_order_.resize(gm.num_scalars());
        for (std::size_t v = 0; v < gm.num_scalars(); ++v) {
            std::vector<double> key(p.cells(v), 0.0);
            for (std::size_t f : touch_[v]) {
                if (!gm.has_cost(f) || scopes_[f].size() != 1) continue;
                for (std::size_t a = 0; a < key.size(); ++a) key[a] += cost_floor(gm, f, {p.cell(v, a)});
            }
            cell_order_[v].resize(key.size());
            std::iota(cell_order_[v].begin(), cell_order_[v].end(), std::size_t{0});
            std::stable_sort(cell_order_[v].begin(), cell_order_[v].end(),
                             [&](std::size_t x, std::size_t y) { return key[x] < key[y]; });
        }
        lo_.assign(gm.num_scalars(), 0);
        hi_.resize(gm.num_scalars());
        box_.resize(gm.num_scalars());
        for (std::size_t s = 0; s < gm.num_scalars(); ++s) {
            hi_[s] = p.cells(s) - 1;
            box_[s] = p.domain(s);
        }
        floor_.assign(gm.num_factors(), 0.0);
        queued_.assign(gm.num_factors(), 0);
    }

    void run()
    {
        std::vector<std::size_t> all(gm_.num_factors());
        std::iota(all.begin(), all.end(), std::size_t{0});
        if (!propagate(all)) return;
        for (std::size_t f = 0; f < gm_.num_factors(); ++f) {
            if (!gm_.has_cost(f)) continue;
            floor_[f] = cost_floor(gm_, f, gather(f));
            bound_ += floor_[f];
        }
        visit(0);
    }

    double best = INFINITY;
    std::vector<std::size_t> best_cells;
    std::size_t nodes = 0;

private:
    struct RangeUndo {
        std::size_t s, lo, hi;
    };
    struct FloorUndo {
        std::size_t f;
        double floor;
    };

    std::vector<Interval> gather(std::size_t f) const
    {
        std::vector<Interval> x;
        x.reserve(scopes_[f].size());
        for (std::size_t s : scopes_[f]) x.push_back(box_[s]);
        return x;
    }

    void set_range(std::size_t s, std::size_t lo, std::size_t hi)
    {
        range_trail_.push_back({s, lo_[s], hi_[s]});
        lo_[s] = lo;
        hi_[s] = hi;
        box_[s] = Interval{p_.cell(s, lo).lo, p_.cell(s, hi).hi};
        changed_.push_back(s);
    }

    // Narrows ranges to a fixed point starting from the given factors.
    // False when some constraint rejects its current hull.
    bool propagate(const std::vector<std::size_t>& start)
    {
        std::deque<std::size_t> queue;
        auto push = [&](std::size_t f) {
            if (gm_.is_constraint(f) && !queued_[f]) queued_[f] = 1, queue.push_back(f);
        };
        for (std::size_t f : start) push(f);
        bool ok = true;
        while (ok && !queue.empty()) {
            const std::size_t f = queue.front();
            queue.pop_front();
            queued_[f] = 0;
            std::vector<Interval> x = gather(f);
            if (++nodes > cap_) too_large();
            if (!accepts(gm_, f, x)) {
                ok = false;
                break;
            }
            for (std::size_t k = 0; k < scopes_[f].size(); ++k) {
                const std::size_t s = scopes_[f][k];
                if (lo_[s] == hi_[s]) continue;
                auto fits = [&](std::size_t a) {
                    if (++nodes > cap_) too_large();
                    x[k] = p_.cell(s, a);
                    return accepts(gm_, f, x);
                };
                std::size_t lo = lo_[s], hi = hi_[s];
                while (lo < hi && !fits(lo)) ++lo;
                while (hi > lo && !fits(hi)) --hi;
                if (lo == hi && !fits(lo)) {
                    ok = false;
                    break;
                }
                if (lo != lo_[s] || hi != hi_[s]) {
                    set_range(s, lo, hi);
                    for (std::size_t g : touch_[s])
                        if (g != f) push(g);
                }
                x[k] = box_[s];
            }
        }
        for (std::size_t f : queue) queued_[f] = 0;
        return ok;
    }

    void visit(std::size_t depth)
    {
        if (depth == order_.size()) {
            if (bound_ < best) {
                best = bound_;
                best_cells = lo_;
            }
            return;
        }
        const std::size_t s = order_[depth];
        const std::size_t lo = lo_[s], hi = hi_[s];
        for (std::size_t a : cell_order_[s]) {
            if (a < lo || a > hi) continue;
            if (++nodes > cap_) too_large();
            const std::size_t range_mark = range_trail_.size(), floor_mark = floor_trail_.size();
            const double saved_bound = bound_;
            changed_.clear();
            bool ok = true;
            if (lo != hi) {
                set_range(s, a, a);
                ok = propagate(touch_[s]);
            }
            if (ok) {
                for (std::size_t v : changed_)
                    for (std::size_t f : touch_[v]) {
                        if (!gm_.has_cost(f)) continue;
                        const double val = cost_floor(gm_, f, gather(f));
                        if (val == floor_[f]) continue;
                        floor_trail_.push_back({f, floor_[f]});
                        bound_ += val - floor_[f];
                        floor_[f] = val;
                    }
                if (bound_ < best) visit(depth + 1);
            }
            while (floor_trail_.size() > floor_mark) {
                floor_[floor_trail_.back().f] = floor_trail_.back().floor;
                floor_trail_.pop_back();
            }
            while (range_trail_.size() > range_mark) {
                const RangeUndo& u = range_trail_.back();
                lo_[u.s] = u.lo;
                hi_[u.s] = u.hi;
                box_[u.s] = Interval{p_.cell(u.s, u.lo).lo, p_.cell(u.s, u.hi).hi};
                range_trail_.pop_back();
            }
            bound_ = saved_bound;
        }
    }

    const FactorGraph& gm_;
    const Partition& p_;
    std::size_t cap_;
    std::vector<std::size_t> order_;
    std::vector<std::vector<std::size_t>> scopes_;
    std::vector<std::vector<std::size_t>> touch_;
    std::vector<std::vector<std::size_t>> cell_order_;
    std::vector<std::size_t> lo_, hi_;
    std::vector<Interval> box_;
    std::vector<double> floor_;
    std::vector<char> queued_;
    std::vector<RangeUndo> range_trail_;
    std::vector<FloorUndo> floor_trail_;
    std::vector<std::size_t> changed_;
    double bound_ = 0.0;
};

// Root of a monotone function near x0: geometric bracket expansion, then
// the Illinois variant of regula falsi.
std::optional<double> monotone_root(const std::function<double(double)>& g, double x0, double scale)
{
    double g0 = g(x0);
    if (!std::isfinite(g0)) return std::nullopt;
    if (g0 == 0.0) return x0;
    double a = x0, ga = g0, b = x0, gb = g0;
    bool bracketed = false;
    for (int k = 0; k < 80 && !bracketed; ++k) {
        const double step = scale * std::ldexp(1.0, k);
        for (const double cand : {x0 + step, x0 - step}) {
            const double gc = g(cand);
            if (!std::isfinite(gc)) continue;
            if ((gc > 0.0) != (g0 > 0.0) || gc == 0.0) {
                b = cand, gb = gc, bracketed = true;
                break;
            }
        }
    }
    if (!bracketed) return std::nullopt;
    if (gb == 0.0) return b;
    int side = 0;
    for (int it = 0; it < 200; ++it) {
        const double c = (a * gb - b * ga) / (gb - ga);
        const double gc = g(c);
        if (!std::isfinite(gc)) return std::nullopt;
        if (gc == 0.0 || std::abs(b - a) <= 4e-16 * std::max({std::abs(a), std::abs(b), 1e-300})) return c;
        if ((gc > 0.0) == (gb > 0.0)) {
            b = c, gb = gc;
            if (side == -1) ga *= 0.5;
            side = -1;
        } else {
            a = c, ga = gc;
            if (side == 1) gb *= 0.5;
            side = 1;
        }
        if (std::abs(b - a) <= 4e-16 * std::max(std::abs(a), std::abs(b))) return std::abs(ga) < std::abs(gb) ? a : b;
    }
    return std::abs(ga) < std::abs(gb) ? a : b;
}

// Network equations solved for given injections: flows follow from the
// injections on a spanning tree, the single chord flow (if any) from
// bisection on its edge law, potentials from the slack outward.
class ContinuousModel {
public:
    explicit ContinuousModel(const FactorGraph& gm) : gm_(gm)
    {
        if (gm.objective != ObjectiveMode::MinCost) throw InputError("continuous-approx oracle needs the min_cost objective");
        const std::size_t n = gm.net.nodes.size();
        slack_ = gm.net.slack();
        std::vector<std::vector<std::size_t>> incident(n);
        for (std::size_t l = 0; l < gm.links.size(); ++l) {
            if (gm.links[l].kind != LinkKind::Edge)
                throw InputError("continuous-approx oracle does not model transforms");
            incident[gm.links[l].a].push_back(l);
            incident[gm.links[l].b].push_back(l);
        }
        parent_link_.assign(n, npos);
        parent_.assign(n, npos);
        std::vector<char> seen(n, 0), tree_link(gm.links.size(), 0);
        std::deque<std::size_t> queue{slack_};
        seen[slack_] = 1;
        while (!queue.empty()) {
            const std::size_t v = queue.front();
            queue.pop_front();
            order_.push_back(v);
            for (std::size_t l : incident[v]) {
                const std::size_t u = gm.links[l].a == v ? gm.links[l].b : gm.links[l].a;
                if (seen[u]) continue;
                seen[u] = 1;
                parent_[u] = v;
                parent_link_[u] = l;
                tree_link[l] = 1;
                queue.push_back(u);
            }
        }
        if (order_.size() != n) throw InputError("continuous-approx oracle needs a connected network");
        for (std::size_t l = 0; l < gm.links.size(); ++l) {
            if (tree_link[l]) continue;
            if (chord_ != npos) throw InputError("continuous-approx oracle supports trees and single-cycle networks");
            chord_ = l;
        }
        // subtree membership: member_[v][w] = w lies below v
        member_.assign(n, std::vector<char>(n, 0));
        for (std::size_t w = 0; w < n; ++w)
            for (std::size_t v = w; v != npos; v = parent_[v]) member_[v][w] = 1;
    }

    std::size_t slack() const { return slack_; }

    struct State {
        std::vector<double> pi, q, fwd;  // per node, per node, per link (a -> b)
    };

    // q[slack] is ignored and recomputed.
    std::optional<State> solve(std::vector<double> q, double pi_slack) const
    {
        State st;
        st.q = std::move(q);
        double scale = 1.0;
        for (std::size_t i = 0; i < st.q.size(); ++i)
            if (i != slack_) scale += std::abs(st.q[i]);
        if (chord_ == npos) {
            if (!propagate(st, 0.0, pi_slack)) return std::nullopt;
        } else {
            const Link& c = gm_.links[chord_];
            const EdgeSpec& e = gm_.net.edges[c.index];
            auto h = [&](double x) {
                if (!propagate(st, x, pi_slack)) return std::numeric_limits<double>::quiet_NaN();
                return x - forward_flow(e, st.pi[c.a], st.pi[c.b]);
            };
            const auto x = monotone_root(h, 0.0, scale);
            if (!x || !propagate(st, *x, pi_slack)) return std::nullopt;
        }
        return st;
    }

    std::vector<double> assemble(const State& st) const
    {
        const std::size_t n = gm_.net.nodes.size();
        std::vector<std::vector<double>> pot(n), inj(n), flows(gm_.links.size());
        for (std::size_t i = 0; i < n; ++i) pot[i] = {st.pi[i]}, inj[i] = {st.q[i]};
        for (std::size_t l = 0; l < gm_.links.size(); ++l) flows[l] = {st.fwd[l], -st.fwd[l]};
        return assemble_point(gm_, pot, inj, flows);
    }

private:
    bool propagate(State& st, double chord_flow, double pi_slack) const
    {
        const std::size_t n = gm_.net.nodes.size();
        st.fwd.assign(gm_.links.size(), 0.0);
        st.pi.assign(n, NAN);
        if (chord_ != npos) st.fwd[chord_] = chord_flow;
        double slack_out = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            if (v == slack_) continue;
            const std::size_t l = parent_link_[v];
            // outflow of the subtree below v through its parent link
            double out = 0.0;
            for (std::size_t w = 0; w < n; ++w)
                if (member_[v][w]) out += st.q[w];
            if (chord_ != npos) {
                const Link& c = gm_.links[chord_];
                if (member_[v][c.a]) out -= chord_flow;
                if (member_[v][c.b]) out += chord_flow;
            }
            st.fwd[l] = gm_.links[l].a == v ? out : -out;
            if (parent_[v] == slack_) slack_out -= out;
        }
        if (chord_ != npos) {
            const Link& c = gm_.links[chord_];
            if (c.a == slack_) slack_out += chord_flow;
            if (c.b == slack_) slack_out -= chord_flow;
        }
        st.q[slack_] = slack_out;
        st.pi[slack_] = pi_slack;
        for (std::size_t v : order_) {
            if (v == slack_) continue;
            const std::size_t l = parent_link_[v];
            const Link& link = gm_.links[l];
            const EdgeSpec& e = gm_.net.edges[link.index];
            const double p = st.pi[parent_[v]];
            const double target = st.fwd[l];
            std::function<double(double)> g;
            if (link.a == v)
                g = [&](double y) { return forward_flow(e, y, p) - target; };
            else
                g = [&](double y) { return forward_flow(e, p, y) - target; };
            const auto y = monotone_root(g, p, 1.0 + std::abs(p));
            if (!y) return false;
            st.pi[v] = *y;
        }
        return true;
    }

    const FactorGraph& gm_;
    std::size_t slack_ = 0;
    std::size_t chord_ = npos;
    std::vector<std::size_t> order_, parent_, parent_link_;
    std::vector<std::vector<char>> member_;
};

double point_tolerance(const std::vector<double>& x)
{
    double mag = 0.0;
    for (double v : x) mag = std::max(mag, std::abs(v));
    return 1e-7 * (1.0 + mag);
}

OracleResult discretized(const FactorGraph& gm, const Partition& p, std::size_t cap)
{
    DiscreteSearch search(gm, p, cap);
    search.run();
    OracleResult r;
    r.enumerated = search.nodes;
    if (!std::isfinite(search.best)) return r;
    r.found = true;
    r.value = search.best;
    r.cells = search.best_cells;
    r.point.resize(gm.num_scalars());
    for (std::size_t s = 0; s < gm.num_scalars(); ++s) r.point[s] = p.cell(s, r.cells[s]).mid();
    r.residual = point_residual(gm, r.point);
    r.tolerance = point_tolerance(r.point);
    r.feasible = r.residual <= r.tolerance;
    return r;
}

OracleResult continuous(const FactorGraph& gm, const Partition& p, const OracleOptions& opt, std::size_t cap)
{
    const ContinuousModel model(gm);
    const std::size_t n = gm.net.nodes.size(), slack = model.slack();
    std::vector<std::size_t> free_nodes, qvar;
    for (std::size_t i = 0; i < n; ++i) {
        if (i == slack) continue;
        free_nodes.push_back(i);
        qvar.push_back(gm.blocks[gm.injection_block[i]].scalars[0]);
    }
    // The slack potential is read from the first potential copy at the slack.
    std::size_t pi_var = npos;
    for (const ScalarVar& s : gm.scalars)
        if (s.role == ScalarRole::Potential && s.node == slack) {
            pi_var = static_cast<std::size_t>(&s - gm.scalars.data());
            break;
        }

    auto node_cost = [&](std::size_t i, double q) { return gm.net.nodes[i].cost[0](q); };
    const std::vector<Interval> domains = gm.domains();

    auto evaluate = [&](const std::vector<double>& qfree, double pi_slack, std::vector<double>* point) {
        std::vector<double> q(n, 0.0);
        for (std::size_t k = 0; k < free_nodes.size(); ++k) q[free_nodes[k]] = qfree[k];
        const auto st = model.solve(q, pi_slack);
        if (!st) return std::numeric_limits<double>::infinity();
        std::vector<double> x = model.assemble(*st);
        for (std::size_t s = 0; s < x.size(); ++s) {
            const Interval d = domains[s];
            if (!(x[s] >= d.lo && x[s] <= d.hi)) return std::numeric_limits<double>::infinity();
        }
        double c = 0.0;
        for (std::size_t k = 0; k < free_nodes.size(); ++k) c += node_cost(free_nodes[k], qfree[k]);
        if (point) *point = std::move(x);
        return c;
    };

    std::vector<double> pis;
    if (pi_var != npos)
        for (std::size_t a = 0; a < p.cells(pi_var); ++a) pis.push_back(p.cell(pi_var, a).mid());
    else
        pis.push_back(0.0);

    // Midpoint grid ordered by cost: the first combination that solves is
    // the best midpoint assignment. When no midpoint solves, every
    // injection cell is split in two and the search repeats, while the
    // grid stays within the cap.
    OracleResult r;
    double best_pi = 0.0;
    std::vector<double> best_q;
    std::vector<double> qfree(qvar.size());
    for (std::size_t sub = 1; sub <= 64 && !r.found; sub *= 2) {
        std::size_t total = 1;
        bool fits = true;
        for (std::size_t v : qvar) {
            const std::size_t c = p.cells(v) * sub;
            if (total > cap / c) fits = false;
            total *= fits ? c : 1;
        }
        if (fits && total > cap / pis.size()) fits = false;
        if (!fits) {
            if (sub == 1) too_large();
            break;
        }
        auto decode = [&](std::size_t idx) {
            for (std::size_t k = qvar.size(); k-- > 0;) {
                const std::size_t c = p.cells(qvar[k]) * sub;
                const std::size_t j = idx % c;
                const Interval cell = p.cell(qvar[k], j / sub);
                qfree[k] = cell.lo + (static_cast<double>(j % sub) + 0.5) * cell.width() / static_cast<double>(sub);
                idx /= c;
            }
        };
        std::vector<std::pair<double, std::size_t>> grid(total);
        for (std::size_t idx = 0; idx < total; ++idx) {
            decode(idx);
            double c = 0.0;
            for (std::size_t k = 0; k < qvar.size(); ++k) c += node_cost(free_nodes[k], qfree[k]);
            grid[idx] = {c, idx};
        }
        std::sort(grid.begin(), grid.end());
        for (const auto& [c, idx] : grid) {
            decode(idx);
            for (double pi : pis) {
                ++r.enumerated;
                std::vector<double> x;
                const double v = evaluate(qfree, pi, &x);
                if (!std::isfinite(v)) continue;
                r.found = true;
                r.value = v;
                r.point = std::move(x);
                best_q = qfree;
                best_pi = pi;
                break;
            }
            if (r.found) break;
        }
    }
    if (!r.found) return r;

    if (opt.polish) {
        // Compass search over the free injections (and the slack potential
        // when it is not fixed), starting from cell-width steps.
        std::vector<double> coords = best_q;
        std::vector<Interval> bounds;
        std::vector<double> step;
        for (std::size_t k = 0; k < qvar.size(); ++k) {
            bounds.push_back(domains[qvar[k]]);
            step.push_back(p.cell(qvar[k], p.locate(qvar[k], best_q[k])).width());
        }
        const bool move_pi = pi_var != npos && domains[pi_var].width() > 0.0;
        if (move_pi) {
            coords.push_back(best_pi);
            bounds.push_back(domains[pi_var]);
            step.push_back(p.cell(pi_var, p.locate(pi_var, best_pi)).width());
        }
        auto value_at = [&](const std::vector<double>& c, std::vector<double>* pt) {
            const std::vector<double> qf(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(qvar.size()));
            return evaluate(qf, move_pi ? c.back() : best_pi, pt);
        };
        double cur = r.value;
        std::size_t evals = 0;
        for (int halvings = 0; halvings < 60 && evals < 20000; ++halvings) {
            bool improved = true;
            while (improved && evals < 20000) {
                improved = false;
                for (std::size_t k = 0; k < coords.size(); ++k) {
                    for (const double dir : {-1.0, 1.0}) {
                        std::vector<double> trial = coords;
                        trial[k] = std::clamp(coords[k] + dir * step[k], bounds[k].lo, bounds[k].hi);
                        if (trial[k] == coords[k]) continue;
                        ++evals;
                        std::vector<double> pt;
                        const double v = value_at(trial, &pt);
                        if (v < cur) {
                            cur = v;
                            coords = std::move(trial);
                            r.point = std::move(pt);
                            improved = true;
                            break;
                        }
                    }
                }
            }
            for (double& s : step) s *= 0.5;
        }
        r.value = cur;
        r.enumerated += evals;
    }
    r.residual = point_residual(gm, r.point);
    r.tolerance = point_tolerance(r.point);
    r.feasible = r.residual <= r.tolerance;
    return r;
}

}  // namespace

const char* oracle_mode_name(OracleMode m)
{
    return m == OracleMode::Discretized ? "discretized" : "continuous-approx";
}

std::size_t oracle_cap()
{
    const char* env = std::getenv("PCNF_ORACLE_CAP");
    if (env == nullptr) return kDefaultCap;
    std::size_t v = 0;
    const std::string s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || v == 0) return kDefaultCap;
    return v;
}

OracleResult grid_enumerate(const FactorGraph& gm, const Partition& p, OracleMode mode, const OracleOptions& opt)
{
    require_supported(gm);
    if (auto err = check_partition(p, gm.domains()); !err.empty()) throw InputError("oracle: " + err);
    const std::size_t cap = opt.cap != 0 ? opt.cap : oracle_cap();
    return mode == OracleMode::Discretized ? discretized(gm, p, cap) : continuous(gm, p, opt, cap);
}

double point_residual(const FactorGraph& gm, const std::vector<double>& x)
{
    const std::size_t K = gm.components;
    double worst = 0.0;
    auto note = [&](double v) { worst = std::max(worst, std::isnan(v) ? std::numeric_limits<double>::infinity() : v); };
    for (std::size_t s = 0; s < gm.num_scalars(); ++s) {
        const Interval d = gm.scalars[s].domain;
        note(std::max({0.0, d.lo - x[s], x[s] - d.hi}));
    }
    auto at = [&](std::size_t block, std::size_t k) { return x[gm.blocks[block].scalars[k]]; };
    for (const Link& l : gm.links) {
        if (l.kind == LinkKind::Edge) {
            const EdgeSpec& e = gm.net.edges[l.index];
            std::vector<double> pa(K), pb(K);
            for (std::size_t k = 0; k < K; ++k) pa[k] = at(l.end_ab, k), pb[k] = at(l.end_ba, k);
            const auto f = edge_flow(e, pa, pb, Direction::Forward);
            const auto r = edge_flow(e, pb, pa, Direction::Reverse);
            for (std::size_t k = 0; k < K; ++k) {
                note(std::abs(at(l.end_ab, K + k) - f[k]));
                note(std::abs(at(l.end_ba, K + k) - r[k]));
            }
        } else {
            const TransformSpec& spec = *gm.net.nodes[l.index].transform;
            std::vector<double> pin(K);
            for (std::size_t k = 0; k < K; ++k) pin[k] = at(l.end_ab, k);
            std::optional<double> ratio;
            if (l.ratio != npos) ratio = x[gm.blocks[l.ratio].scalars[0]];
            const auto out = apply_transform(spec, pin, ratio);
            for (std::size_t k = 0; k < K; ++k) {
                note(std::abs(at(l.end_ba, k) - out[k]));
                note(std::abs(at(l.end_ab, K + k) + at(l.end_ba, K + k)));
            }
        }
    }
    for (const FactorNode& f : gm.factors) {
        if (f.kind == FactorKind::NodeLaw) {
            const bool has_q = !f.blocks.empty() && gm.blocks[f.blocks[0]].kind == BlockKind::Injection;
            const std::size_t first = has_q ? 1 : 0;
            for (std::size_t k = 0; k < K; ++k) {
                if (f.conservation && has_q) {
                    double s = at(f.blocks[0], k);
                    for (std::size_t e = first; e < f.blocks.size(); ++e) s -= at(f.blocks[e], K + k);
                    note(std::abs(s));
                }
                for (std::size_t e = first + 1; e < f.blocks.size(); ++e)
                    note(std::abs(at(f.blocks[e], k) - at(f.blocks[first], k)));
            }
        } else if (f.kind == FactorKind::Aggregator) {
            const AggregatorSpec& g = gm.net.aggregators[f.aggregator];
            double s = 0.0;
            for (std::size_t b : f.blocks) s += at(b, g.component);
            note(std::max({0.0, g.lower - std::abs(s), std::abs(s) - g.upper}));
        }
    }
    return worst;
}

VertexResult lp_vertex_enumerate(const LinearProgram& lp, std::size_t max_cols)
{
    const std::size_t m = lp.num_rows(), n = lp.num_cols();
    if (n > max_cols) throw CapacityError("vertex enumeration limited to " + std::to_string(max_cols) + " columns");
    // Dense [A | b], reduced to row echelon form.
    std::vector<std::vector<double>> a(m, std::vector<double>(n + 1, 0.0));
    for (std::size_t j = 0; j < n; ++j)
        for (const auto& [i, v] : lp.cols[j]) a[i][j] += v;
    for (std::size_t i = 0; i < m; ++i) a[i][n] = lp.rhs[i];
    double scale = 1.0;
    for (const auto& row : a)
        for (double v : row) scale = std::max(scale, std::abs(v));
    const double tol = 1e-11 * scale;
    std::size_t rank = 0;
    for (std::size_t j = 0; j < n && rank < m; ++j) {
        std::size_t piv = rank;
        for (std::size_t i = rank; i < m; ++i)
            if (std::abs(a[i][j]) > std::abs(a[piv][j])) piv = i;
        if (std::abs(a[piv][j]) <= tol) continue;
        std::swap(a[piv], a[rank]);
        for (std::size_t i = 0; i < m; ++i) {
            if (i == rank || a[i][j] == 0.0) continue;
            const double f = a[i][j] / a[rank][j];
            for (std::size_t k = j; k <= n; ++k) a[i][k] -= f * a[rank][k];
        }
        ++rank;
    }
    VertexResult out;
    for (std::size_t i = rank; i < m; ++i)
        if (std::abs(a[i][n]) > 1e-9 * scale) return out;  // inconsistent equalities
    a.resize(rank);

    std::vector<std::size_t> subset(rank);
    std::iota(subset.begin(), subset.end(), 0);
    auto next_subset = [&]() {
        for (std::size_t k = rank; k-- > 0;) {
            if (subset[k] < n - rank + k) {
                ++subset[k];
                for (std::size_t j = k + 1; j < rank; ++j) subset[j] = subset[j - 1] + 1;
                return true;
            }
        }
        return false;
    };
    if (rank > n) return out;
    do {
        ++out.bases;
        std::vector<std::vector<double>> s(rank, std::vector<double>(rank + 1));
        for (std::size_t i = 0; i < rank; ++i) {
            for (std::size_t k = 0; k < rank; ++k) s[i][k] = a[i][subset[k]];
            s[i][rank] = a[i][n];
        }
        bool singular = false;
        for (std::size_t c = 0; c < rank && !singular; ++c) {
            std::size_t piv = c;
            for (std::size_t i = c; i < rank; ++i)
                if (std::abs(s[i][c]) > std::abs(s[piv][c])) piv = i;
            if (std::abs(s[piv][c]) <= tol) {
                singular = true;
                break;
            }
            std::swap(s[piv], s[c]);
            for (std::size_t i = 0; i < rank; ++i) {
                if (i == c) continue;
                const double f = s[i][c] / s[c][c];
                for (std::size_t k = c; k <= rank; ++k) s[i][k] -= f * s[c][k];
            }
        }
        if (singular) continue;
        std::vector<double> x(n, 0.0);
        bool feasible = true;
        for (std::size_t i = 0; i < rank; ++i) {
            double v = s[i][rank] / s[i][i];
            if (v < -1e-9) feasible = false;
            x[subset[i]] = std::max(v, 0.0);
        }
        if (!feasible || lp.residual(x) > 1e-7 * scale) continue;
        const double obj = lp.objective(x);
        if (out.status != LPStatus::Optimal || obj < out.objective) {
            out.status = LPStatus::Optimal;
            out.objective = obj;
            out.x = std::move(x);
        }
    } while (next_subset());
    return out;
}

}  // namespace pcnf
