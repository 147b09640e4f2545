#include "pcnf/factor_graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "pcnf/errors.hpp"

namespace pcnf {

namespace {

std::string sanitize(const std::string& id)
{
    std::string out = id;
    for (char& c : out) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.';
        if (!ok) c = '_';
    }
    return out;
}

Verdict meet(Verdict a, Verdict b) { return std::min(a, b); }

// Verdict for "0 in s" where s was accumulated from terms of total magnitude mag.
Verdict zero_in(Interval s, double mag)
{
    if (s.contains(0.0)) return Verdict::Certain;
    const double eps = kFeasibilityRelTol * mag + 1e-12;
    return s.inflated(eps).contains(0.0) ? Verdict::Possible : Verdict::Infeasible;
}

// Verdict for "a and b intersect".
Verdict overlap(Interval a, Interval b)
{
    if (intersects(a, b)) return Verdict::Certain;
    return intersects_tol(a, b) ? Verdict::Possible : Verdict::Infeasible;
}

// Verdict for a common point of all intervals.
Verdict common_point(std::span<const Interval> xs)
{
    if (xs.size() < 2) return Verdict::Certain;
    double lo = -INFINITY, hi = INFINITY, eps = 0.0;
    for (const Interval& x : xs) {
        lo = std::max(lo, x.lo);
        hi = std::min(hi, x.hi);
        eps = std::max(eps, feasibility_slack(x));
    }
    if (lo <= hi) return Verdict::Certain;
    return lo <= hi + 2.0 * eps ? Verdict::Possible : Verdict::Infeasible;
}

}  // namespace

std::vector<std::size_t> FactorGraph::scope(std::size_t f) const
{
    std::vector<std::size_t> out;
    for (std::size_t b : factors[f].blocks) out.insert(out.end(), blocks[b].scalars.begin(), blocks[b].scalars.end());
    return out;
}

std::vector<Interval> FactorGraph::domains() const
{
    std::vector<Interval> out;
    out.reserve(scalars.size());
    for (const ScalarVar& s : scalars) out.push_back(s.domain);
    return out;
}

Verdict FactorGraph::test(std::size_t fi, std::span<const Interval> box) const
{
    const FactorNode& f = factors[fi];
    const std::size_t K = components;
    switch (f.kind) {
    case FactorKind::Cost:
        return Verdict::Certain;

    case FactorKind::NodeLaw: {
        const bool has_q = !f.blocks.empty() && blocks[f.blocks[0]].kind == BlockKind::Injection;
        const std::size_t first_end = has_q ? K : 0;
        const std::size_t n_ends = (box.size() - first_end) / (2 * K);
        Verdict v = Verdict::Certain;
        std::vector<Interval> copies(n_ends);
        for (std::size_t k = 0; k < K; ++k) {
            if (f.conservation && has_q) {
                Interval s = box[k];
                double mag = box[k].magnitude();
                for (std::size_t e = 0; e < n_ends; ++e) {
                    const Interval& phi = box[first_end + e * 2 * K + K + k];
                    s -= phi;
                    mag += phi.magnitude();
                }
                v = meet(v, zero_in(s, mag));
            }
            for (std::size_t e = 0; e < n_ends; ++e) copies[e] = box[first_end + e * 2 * K + k];
            v = meet(v, common_point(copies));
            if (v == Verdict::Infeasible) return v;
        }
        return v;
    }

    case FactorKind::EdgeLaw: {
        const Link& l = links[f.link];
        const EdgeSpec& edge = net.edges[l.index];
        const std::span<const Interval> pa = box.subspan(0, K), fa = box.subspan(K, K);
        const std::span<const Interval> pb = box.subspan(2 * K, K), fb = box.subspan(3 * K, K);
        if (physics_is_monotone(edge.physics)) {
            // phi_ab = g(D), phi_ba = -phi_ab: the three conditions share one
            // scalar, and g is continuous and monotone, so this test is exact.
            const Interval F = edge_flow_enclosure(edge, pa, pb, Direction::Forward)[0];
            const Interval lo_hi{std::max({F.lo, fa[0].lo, -fb[0].hi}), std::min({F.hi, fa[0].hi, -fb[0].lo})};
            if (lo_hi.lo <= lo_hi.hi) return Verdict::Certain;
            const double eps = feasibility_slack(F) + feasibility_slack(fa[0]) + feasibility_slack(fb[0]);
            return lo_hi.lo <= lo_hi.hi + eps ? Verdict::Possible : Verdict::Infeasible;
        }
        const Box F = edge_flow_enclosure(edge, pa, pb, Direction::Forward);
        const Box R = edge_flow_enclosure(edge, pb, pa, Direction::Reverse);
        Verdict v = Verdict::Possible;
        for (std::size_t k = 0; k < K; ++k) {
            v = meet(v, overlap(F[k], fa[k]));
            v = meet(v, overlap(R[k], fb[k]));
        }
        if (v == Verdict::Infeasible) return v;
        // A feasible witness at the potential midpoints upgrades the verdict.
        std::vector<double> ma(K), mb(K);
        for (std::size_t k = 0; k < K; ++k) ma[k] = pa[k].mid(), mb[k] = pb[k].mid();
        const auto wf = edge_flow(edge, ma, mb, Direction::Forward);
        const auto wr = edge_flow(edge, mb, ma, Direction::Reverse);
        for (std::size_t k = 0; k < K; ++k)
            if (!fa[k].contains(wf[k]) || !fb[k].contains(wr[k])) return v;
        return Verdict::Certain;
    }

    case FactorKind::Transform: {
        const Link& l = links[f.link];
        const TransformSpec& spec = *net.nodes[l.index].transform;
        const std::span<const Interval> pin = box.subspan(0, K), fio = box.subspan(K, K);
        const std::span<const Interval> pout = box.subspan(2 * K, K), foi = box.subspan(3 * K, K);
        std::optional<Interval> ratio;
        if (l.ratio != npos) ratio = box[4 * K];
        const Box T = transform_enclosure(spec, pin, ratio);
        Verdict v = K == 1 ? Verdict::Certain : Verdict::Possible;
        for (std::size_t k = 0; k < K; ++k) {
            v = meet(v, overlap(T[k], pout[k]));
            v = meet(v, zero_in(fio[k] + foi[k], fio[k].magnitude() + foi[k].magnitude()));
        }
        return v;
    }

    case FactorKind::Aggregator: {
        const AggregatorSpec& g = net.aggregators[f.aggregator];
        Interval s{0.0};
        double mag = 0.0;
        for (std::size_t m = 0; m < f.blocks.size(); ++m) {
            s += box[m * K + g.component];
            mag += box[m * K + g.component].magnitude();
        }
        const Interval a = abs(s);
        if (a.hi >= g.lower && a.lo <= g.upper) return Verdict::Certain;
        const double eps = kFeasibilityRelTol * std::max(mag, g.lower) + 1e-12;
        return (a.hi + eps >= g.lower && a.lo <= g.upper + eps) ? Verdict::Possible : Verdict::Infeasible;
    }
    }
    return Verdict::Possible;
}

double FactorGraph::cost_lower_bound(std::size_t fi, std::span<const Interval> box) const
{
    double total = 0.0;
    for (const CostTerm& t : factors[fi].costs) {
        switch (t.kind) {
        case CostTerm::Kind::Unary:
            total += t.fn.min_over(box[t.pos[0]]);
            break;
        case CostTerm::Kind::ActivePower:
            total += t.fn.min_over(box[t.pos[0]] * box[t.pos[2]] + box[t.pos[1]] * box[t.pos[3]]);
            break;
        case CostTerm::Kind::ReactivePower:
            total += t.fn.min_over(box[t.pos[1]] * box[t.pos[2]] - box[t.pos[0]] * box[t.pos[3]]);
            break;
        case CostTerm::Kind::LineLoss:
            total += t.weight * (sqr(box[t.pos[0]] - box[t.pos[2]]) + sqr(box[t.pos[1]] - box[t.pos[3]])).lo;
            break;
        case CostTerm::Kind::AbsResidual: {
            Interval s = box[t.pos[0]];
            for (std::size_t p = 1; p < t.pos.size(); ++p) s -= box[t.pos[p]];
            total += t.weight * s.mignitude();
            break;
        }
        }
    }
    return total;
}

double FactorGraph::cost_at(std::size_t fi, std::span<const double> x) const
{
    double total = 0.0;
    for (const CostTerm& t : factors[fi].costs) {
        switch (t.kind) {
        case CostTerm::Kind::Unary:
            total += t.fn(x[t.pos[0]]);
            break;
        case CostTerm::Kind::ActivePower:
            total += t.fn(x[t.pos[0]] * x[t.pos[2]] + x[t.pos[1]] * x[t.pos[3]]);
            break;
        case CostTerm::Kind::ReactivePower:
            total += t.fn(x[t.pos[1]] * x[t.pos[2]] - x[t.pos[0]] * x[t.pos[3]]);
            break;
        case CostTerm::Kind::LineLoss: {
            const double dr = x[t.pos[0]] - x[t.pos[2]], di = x[t.pos[1]] - x[t.pos[3]];
            total += t.weight * (dr * dr + di * di);
            break;
        }
        case CostTerm::Kind::AbsResidual: {
            double s = x[t.pos[0]];
            for (std::size_t p = 1; p < t.pos.size(); ++p) s -= x[t.pos[p]];
            total += t.weight * std::abs(s);
            break;
        }
        }
    }
    return total;
}

double FactorGraph::violation(std::size_t fi, std::span<const double> x) const
{
    const FactorNode& f = factors[fi];
    const std::size_t K = components;
    double worst = 0.0;
    switch (f.kind) {
    case FactorKind::Cost:
        break;
    case FactorKind::NodeLaw: {
        const bool has_q = !f.blocks.empty() && blocks[f.blocks[0]].kind == BlockKind::Injection;
        const std::size_t first_end = has_q ? K : 0;
        const std::size_t n_ends = (x.size() - first_end) / (2 * K);
        for (std::size_t k = 0; k < K; ++k) {
            if (f.conservation && has_q) {
                double s = x[k];
                for (std::size_t e = 0; e < n_ends; ++e) s -= x[first_end + e * 2 * K + K + k];
                worst = std::max(worst, std::abs(s));
            }
            for (std::size_t e = 1; e < n_ends; ++e)
                worst = std::max(worst, std::abs(x[first_end + e * 2 * K + k] - x[first_end + k]));
        }
        break;
    }
    case FactorKind::EdgeLaw: {
        const EdgeSpec& edge = net.edges[links[f.link].index];
        const std::span<const double> pa = x.subspan(0, K), pb = x.subspan(2 * K, K);
        const auto wf = edge_flow(edge, pa, pb, Direction::Forward);
        const auto wr = edge_flow(edge, pb, pa, Direction::Reverse);
        for (std::size_t k = 0; k < K; ++k) {
            worst = std::max(worst, std::abs(x[K + k] - wf[k]));
            worst = std::max(worst, std::abs(x[3 * K + k] - wr[k]));
        }
        break;
    }
    case FactorKind::Transform: {
        const Link& l = links[f.link];
        const TransformSpec& spec = *net.nodes[l.index].transform;
        std::optional<double> ratio;
        if (l.ratio != npos) ratio = x[4 * K];
        const auto out = apply_transform(spec, x.subspan(0, K), ratio);
        for (std::size_t k = 0; k < K; ++k) {
            worst = std::max(worst, std::abs(x[2 * K + k] - out[k]));
            worst = std::max(worst, std::abs(x[K + k] + x[3 * K + k]));
        }
        break;
    }
    case FactorKind::Aggregator: {
        const AggregatorSpec& g = net.aggregators[f.aggregator];
        double s = 0.0;
        for (std::size_t m = 0; m < f.blocks.size(); ++m) s += x[m * K + g.component];
        const double a = std::abs(s);
        worst = std::max({0.0, g.lower - a, a - g.upper});
        break;
    }
    }
    return worst;
}

FactorGraph build_gm(const Network& input, std::optional<ObjectiveMode> objective)
{
    const ValidationReport rep = validate_network(input);
    if (!rep.ok()) throw InputError("invalid network:\n" + rep.to_string());

    FactorGraph gm;
    gm.net = input;
    gm.objective = objective.value_or(input.objective);
    gm.net.objective = gm.objective;
    gm.components = input.components;
    Network& net = gm.net;
    const std::size_t K = net.components;
    const std::size_t slack = net.slack();

    std::size_t n_current = 0;
    for (const EdgeSpec& e : net.edges) {
        const PhysicsKind pk = physics_kind(e.physics);
        if (pk == PhysicsKind::AcCurrentVoltage) ++n_current;
        const bool ok = gm.objective == ObjectiveMode::DistributionLoss ? pk == PhysicsKind::AcPowerVoltage
                        : gm.objective == ObjectiveMode::OptimalGas     ? pk == PhysicsKind::GasWeymouth
                                                                        : true;
        if (!ok)
            throw InputError(std::string("unsupported objective/physics combination: ") +
                             objective_name(gm.objective) + " with " + physics_name(pk));
    }
    const bool current_form = n_current > 0;
    if (current_form && n_current != net.edges.size() && gm.objective == ObjectiveMode::MinCost)
        throw InputError("unsupported objective/physics combination: min_cost with mixed ac_current physics");

    if (gm.objective == ObjectiveMode::StateEstimation) {
        for (const Measurement& m : net.measurements) {
            const std::size_t i = net.node_index(m.node);
            Box point;
            for (double v : m.value) point.emplace_back(v);
            if (m.kind == Measurement::Kind::Potential) {
                net.nodes[i].potential = point;
            } else if (m.kind == Measurement::Kind::Injection) {
                net.nodes[i].injection = point;
            } else {
                for (EdgeSpec& e : net.edges) {
                    if (e.from == m.node && e.to == m.to) {
                        e.reverse_flow_domain = e.reverse_domain();
                        e.flow_domain = point;
                    } else if (e.to == m.node && e.from == m.to) {
                        e.reverse_flow_domain = point;
                    }
                }
            }
        }
    }

    auto suffix = [&](std::size_t k) { return K == 1 ? std::string() : "_" + std::to_string(k); };
    auto add_scalar = [&](ScalarRole role, std::size_t node, std::size_t peer, std::size_t k, Interval dom,
                          std::string name) {
        ScalarVar s;
        s.role = role;
        s.node = node;
        s.peer = peer;
        s.component = k;
        s.block = gm.blocks.size() - 1;
        s.domain = dom;
        s.name = std::move(name);
        gm.scalars.push_back(std::move(s));
        gm.blocks.back().scalars.push_back(gm.scalars.size() - 1);
    };

    gm.injection_block.assign(net.nodes.size(), npos);
    for (std::size_t i = 0; i < net.nodes.size(); ++i) {
        if (i == slack) continue;
        const std::string id = sanitize(net.nodes[i].id);
        gm.blocks.push_back({BlockKind::Injection, i, npos, npos, {}, "q_" + id});
        gm.injection_block[i] = gm.blocks.size() - 1;
        for (std::size_t k = 0; k < K; ++k)
            add_scalar(ScalarRole::Injection, i, npos, k, net.nodes[i].injection[k], "q_" + id + suffix(k));
    }

    auto add_end = [&](std::size_t link, std::size_t from, std::size_t to, const Box& flow_dom) {
        const std::string name = sanitize(net.nodes[from].id) + "_" + sanitize(net.nodes[to].id);
        gm.blocks.push_back({BlockKind::EdgeEnd, from, to, link, {}, "e_" + name});
        for (std::size_t k = 0; k < K; ++k)
            add_scalar(ScalarRole::Potential, from, to, k, net.nodes[from].potential[k], "pi_" + name + suffix(k));
        for (std::size_t k = 0; k < K; ++k)
            add_scalar(ScalarRole::Flow, from, to, k, flow_dom[k], "phi_" + name + suffix(k));
        return gm.blocks.size() - 1;
    };

    for (std::size_t e = 0; e < net.edges.size(); ++e) {
        const EdgeSpec& edge = net.edges[e];
        Link l;
        l.kind = LinkKind::Edge;
        l.index = e;
        l.a = net.node_index(edge.from);
        l.b = net.node_index(edge.to);
        gm.links.push_back(l);
        const std::size_t li = gm.links.size() - 1;
        gm.links[li].end_ab = add_end(li, l.a, l.b, edge.flow_domain);
        gm.links[li].end_ba = add_end(li, l.b, l.a, edge.reverse_domain());
    }
    for (std::size_t i = 0; i < net.nodes.size(); ++i) {
        if (!net.nodes[i].transform) continue;
        const TransformSpec& t = *net.nodes[i].transform;
        Link l;
        l.kind = LinkKind::Transform;
        l.index = i;
        l.a = i;
        l.b = net.node_index(t.out);
        gm.links.push_back(l);
        const std::size_t li = gm.links.size() - 1;
        Box mirrored;
        for (const Interval& d : t.flow_domain) mirrored.push_back(-d);
        gm.links[li].end_ab = add_end(li, l.a, l.b, t.flow_domain);
        gm.links[li].end_ba = add_end(li, l.b, l.a, mirrored);
        if (t.ratio_domain) {
            const std::string id = sanitize(net.nodes[i].id);
            gm.blocks.push_back({BlockKind::Ratio, i, npos, li, {}, "alpha_" + id});
            add_scalar(ScalarRole::Ratio, i, npos, 0, *t.ratio_domain, "alpha_" + id);
            gm.links[li].ratio = gm.blocks.size() - 1;
        }
    }

    // Outgoing end blocks per node, by link index.
    std::vector<std::vector<std::size_t>> ends(net.nodes.size());
    for (const Link& l : gm.links) {
        ends[l.a].push_back(l.end_ab);
        ends[l.b].push_back(l.end_ba);
    }

    const bool se = gm.objective == ObjectiveMode::StateEstimation;
    auto block_pos = [&](const FactorNode& f, std::size_t block, std::size_t within) {
        std::size_t o = 0;
        for (std::size_t b : f.blocks) {
            if (b == block) return o + within;
            o += gm.blocks[b].scalars.size();
        }
        return npos;
    };

    if (!se && !current_form) {
        for (std::size_t i = 0; i < net.nodes.size(); ++i) {
            if (i == slack) continue;
            FactorNode f;
            f.kind = FactorKind::Cost;
            f.name = "C_" + sanitize(net.nodes[i].id);
            f.node = i;
            f.blocks = {gm.injection_block[i]};
            for (std::size_t k = 0; k < K; ++k)
                if (!net.nodes[i].cost[k].is_zero()) f.costs.push_back({CostTerm::Kind::Unary, net.nodes[i].cost[k], {k}});
            gm.factors.push_back(std::move(f));
        }
    }
    for (const Link& l : gm.links) {
        if (l.ratio == npos) continue;
        const TransformSpec& t = *net.nodes[l.index].transform;
        FactorNode f;
        f.kind = FactorKind::Cost;
        f.name = "Calpha_" + sanitize(net.nodes[l.index].id);
        f.node = l.index;
        f.blocks = {l.ratio};
        if (!t.ratio_cost.is_zero()) f.costs.push_back({CostTerm::Kind::Unary, t.ratio_cost, {0}});
        gm.factors.push_back(std::move(f));
    }

    for (std::size_t i = 0; i < net.nodes.size(); ++i) {
        FactorNode f;
        f.kind = FactorKind::NodeLaw;
        f.name = "N_" + sanitize(net.nodes[i].id);
        f.node = i;
        if (i != slack) f.blocks.push_back(gm.injection_block[i]);
        f.blocks.insert(f.blocks.end(), ends[i].begin(), ends[i].end());
        f.conservation = i != slack && !se;
        if (i != slack && se) {
            for (std::size_t k = 0; k < K; ++k) {
                CostTerm t;
                t.kind = CostTerm::Kind::AbsResidual;
                t.pos.push_back(k);
                for (std::size_t e : ends[i]) t.pos.push_back(block_pos(f, e, K + k));
                f.costs.push_back(std::move(t));
            }
        }
        if (i != slack && !se && current_form) {
            // C_i(V_i I_i^*): V from the first potential copy, I = q_i.
            const std::size_t v0 = block_pos(f, ends[i].front(), 0);
            const NodeSpec& n = net.nodes[i];
            if (!n.cost[0].is_zero())
                f.costs.push_back({CostTerm::Kind::ActivePower, n.cost[0], {v0, v0 + 1, 0, 1}});
            if (!n.cost[1].is_zero())
                f.costs.push_back({CostTerm::Kind::ReactivePower, n.cost[1], {v0, v0 + 1, 0, 1}});
        }
        gm.factors.push_back(std::move(f));
    }

    for (std::size_t li = 0; li < gm.links.size(); ++li) {
        const Link& l = gm.links[li];
        FactorNode f;
        f.link = li;
        f.blocks = {l.end_ab, l.end_ba};
        const std::string name = sanitize(net.nodes[l.a].id) + "_" + sanitize(net.nodes[l.b].id);
        if (l.kind == LinkKind::Edge) {
            f.kind = FactorKind::EdgeLaw;
            f.name = "E_" + name;
            if (gm.objective == ObjectiveMode::DistributionLoss) {
                const auto& z = std::get<AcPowerVoltage>(net.edges[l.index].physics);
                CostTerm t;
                t.kind = CostTerm::Kind::LineLoss;
                t.weight = z.resistance / (z.resistance * z.resistance + z.reactance * z.reactance);
                t.pos = {0, 1, 2 * K, 2 * K + 1};
                f.costs.push_back(std::move(t));
            }
        } else {
            f.kind = FactorKind::Transform;
            f.name = "T_" + name;
            if (l.ratio != npos) f.blocks.push_back(l.ratio);
        }
        gm.factors.push_back(std::move(f));
    }

    for (std::size_t a = 0; a < net.aggregators.size(); ++a) {
        const AggregatorSpec& g = net.aggregators[a];
        FactorNode f;
        f.kind = FactorKind::Aggregator;
        f.name = "A_" + std::to_string(a);
        f.aggregator = a;
        for (const std::string& m : g.members) f.blocks.push_back(gm.injection_block[net.node_index(m)]);
        gm.factors.push_back(std::move(f));
    }

    std::set<std::string> names;
    for (const VariableBlock& b : gm.blocks)
        if (!names.insert(b.name).second) throw InputError("name collision: '" + b.name + "'");
    for (const FactorNode& f : gm.factors)
        if (!names.insert(f.name).second) throw InputError("name collision: '" + f.name + "'");

    gm.block_factors.assign(gm.blocks.size(), {});
    for (std::size_t f = 0; f < gm.factors.size(); ++f)
        for (std::size_t b : gm.factors[f].blocks) gm.block_factors[b].push_back(f);
    return gm;
}

FactorGraph add_aggregator(const FactorGraph& gm, const std::vector<std::string>& members, double lower,
                           double upper, std::size_t component)
{
    if (!(lower >= 0.0)) throw InputError("aggregator lower bound must be nonnegative");
    if (!(lower <= upper)) throw InputError("aggregator lower bound exceeds upper bound");
    if (members.size() < 2) throw InputError("aggregator needs at least two members");
    if (component >= gm.components) throw InputError("aggregator component out of range");
    FactorGraph out = gm;
    FactorNode f;
    f.kind = FactorKind::Aggregator;
    f.aggregator = out.net.aggregators.size();
    f.name = "A_" + std::to_string(f.aggregator);
    for (const std::string& m : members) {
        const std::size_t i = out.net.node_index(m);
        if (out.injection_block[i] == npos) throw InputError("aggregator member '" + m + "' has no injection variable");
        f.blocks.push_back(out.injection_block[i]);
    }
    out.net.aggregators.push_back({members, lower, upper, component});
    const std::size_t fi = out.factors.size();
    for (std::size_t b : f.blocks) out.block_factors[b].push_back(fi);
    out.factors.push_back(std::move(f));
    return out;
}

bool is_tree(const FactorGraph& gm)
{
    const std::size_t V = gm.blocks.size();
    const std::size_t n = V + gm.factors.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t f = 0; f < gm.factors.size(); ++f) {
        for (std::size_t b : gm.factors[f].blocks) {
            const std::size_t x = find(b), y = find(V + f);
            if (x == y) return false;
            parent[x] = y;
        }
    }
    return true;
}

FactorGraph with_domains(const FactorGraph& gm, const std::vector<Interval>& domains)
{
    if (domains.size() != gm.scalars.size()) throw InputError("domain count does not match the graph");
    FactorGraph out = gm;
    for (std::size_t i = 0; i < domains.size(); ++i) out.scalars[i].domain = domains[i];
    return out;
}

std::string dump_gm(const FactorGraph& gm)
{
    static const char* kinds[] = {"cost", "node_law", "edge_law", "transform", "aggregator"};
    std::vector<std::string> vars, facs;
    for (const ScalarVar& s : gm.scalars) {
        std::ostringstream os;
        os.precision(17);
        os << "var " << s.name << ' ' << s.domain;
        vars.push_back(os.str());
    }
    for (const VariableBlock& b : gm.blocks) {
        std::string line = "block " + b.name + " :";
        for (std::size_t s : b.scalars) line += ' ' + gm.scalars[s].name;
        vars.push_back(line);
    }
    for (const FactorNode& f : gm.factors) {
        std::string line = "factor " + f.name + ' ' + kinds[static_cast<int>(f.kind)] + " :";
        for (std::size_t b : f.blocks) line += ' ' + gm.blocks[b].name;
        if (!f.costs.empty()) line += " +cost";
        facs.push_back(line);
    }
    std::sort(vars.begin(), vars.end());
    std::sort(facs.begin(), facs.end());
    std::string out;
    for (const auto& l : vars) out += l + '\n';
    for (const auto& l : facs) out += l + '\n';
    return out;
}

std::vector<double> assemble_point(const FactorGraph& gm, const std::vector<std::vector<double>>& potentials,
                                   const std::vector<std::vector<double>>& injections,
                                   const std::vector<std::vector<double>>& flows, const std::vector<double>& ratios)
{
    const std::size_t K = gm.components;
    std::vector<double> x(gm.scalars.size(), 0.0);
    std::size_t next_ratio = 0;
    std::map<std::size_t, std::size_t> ratio_index;
    for (std::size_t i = 0; i < gm.scalars.size(); ++i) {
        const ScalarVar& s = gm.scalars[i];
        switch (s.role) {
        case ScalarRole::Injection:
            x[i] = injections.at(s.node).at(s.component);
            break;
        case ScalarRole::Potential:
            x[i] = potentials.at(s.node).at(s.component);
            break;
        case ScalarRole::Flow: {
            const VariableBlock& b = gm.blocks[s.block];
            const Link& l = gm.links[b.link];
            x[i] = flows.at(b.link).at((s.block == l.end_ab ? 0 : K) + s.component);
            break;
        }
        case ScalarRole::Ratio: {
            auto [it, fresh] = ratio_index.emplace(s.block, next_ratio);
            if (fresh) ++next_ratio;
            x[i] = ratios.at(it->second);
            break;
        }
        }
    }
    return x;
}

}  // namespace pcnf
