#include "pcnf/network.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "pcnf/errors.hpp"

namespace pcnf {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Piecewise-linear interpolation through (xs, ys) with linear extrapolation.
double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x)
{
    if (xs.size() == 1) return ys[0];
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t k = it == xs.begin() ? 0 : static_cast<std::size_t>(it - xs.begin()) - 1;
    k = std::min(k, xs.size() - 2);
    const double slope = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
    return ys[k] + slope * (x - xs[k]);
}

// Range of the interpolant over [a.lo, a.hi]: endpoints plus interior breakpoints.
Interval interpolate_range(const std::vector<double>& xs, const std::vector<double>& ys, Interval a)
{
    double lo = std::min(interpolate(xs, ys, a.lo), interpolate(xs, ys, a.hi));
    double hi = std::max(interpolate(xs, ys, a.lo), interpolate(xs, ys, a.hi));
    for (std::size_t k = 0; k < xs.size(); ++k) {
        if (xs[k] > a.lo && xs[k] < a.hi) {
            lo = std::min(lo, ys[k]);
            hi = std::max(hi, ys[k]);
        }
    }
    return {lo, hi};
}

bool strictly_increasing(const std::vector<double>& v)
{
    for (std::size_t k = 1; k < v.size(); ++k)
        if (!(v[k] > v[k - 1])) return false;
    return true;
}

bool all_finite(const std::vector<double>& v)
{
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void require_finite(std::span<const double> v)
{
    for (double x : v)
        if (!std::isfinite(x)) throw InputError("non-finite potential");
}

void require_finite(std::span<const Interval> v)
{
    for (const Interval& x : v)
        if (!x.is_finite()) throw InputError("non-finite potential");
}

double gas_root(double d) { return d == 0.0 ? 0.0 : std::copysign(std::sqrt(std::abs(d)), d); }

// Clamped cell index range of grid g touched by [a.lo, a.hi].
std::pair<std::size_t, std::size_t> grid_cells(const std::vector<double>& g, Interval a)
{
    const std::size_t last = g.size() - 2;
    auto cell_of = [&](double x) -> std::size_t {
        auto it = std::upper_bound(g.begin(), g.end(), x);
        std::size_t k = it == g.begin() ? 0 : static_cast<std::size_t>(it - g.begin()) - 1;
        return std::min(k, last);
    };
    return {cell_of(a.lo), cell_of(a.hi)};
}

double mod2(double re, double im) { return re * re + im * im; }

}  // namespace

MonotoneLaw MonotoneLaw::power(double coefficient, double exponent)
{
    MonotoneLaw law;
    law.kind = Kind::Power;
    law.coefficient = coefficient;
    law.exponent = exponent;
    return law;
}

MonotoneLaw MonotoneLaw::table(std::vector<double> xs, std::vector<double> ys)
{
    MonotoneLaw law;
    law.kind = Kind::Table;
    law.xs = std::move(xs);
    law.ys = std::move(ys);
    return law;
}

double MonotoneLaw::operator()(double d) const
{
    if (kind == Kind::Table) return interpolate(xs, ys, d);
    if (d == 0.0) return 0.0;
    return coefficient * std::copysign(std::pow(std::abs(d), exponent), d);
}

Interval MonotoneLaw::image(Interval d) const { return {(*this)(d.lo), (*this)(d.hi)}; }

std::string MonotoneLaw::validate() const
{
    if (kind == Kind::Power) {
        if (!(coefficient > 0.0) || !std::isfinite(coefficient)) return "dissipative law coefficient must be positive";
        if (!(exponent > 0.0) || !std::isfinite(exponent)) return "dissipative law exponent must be positive";
        return {};
    }
    if (xs.empty() || xs.size() != ys.size()) return "dissipative table needs matching, nonempty x and y";
    if (!all_finite(xs) || !all_finite(ys)) return "dissipative table must be finite";
    if (!strictly_increasing(xs)) return "dissipative table x must be strictly increasing";
    for (std::size_t k = 1; k < ys.size(); ++k)
        if (ys[k] < ys[k - 1]) return "dissipative law must be monotone nondecreasing";
    return {};
}

double CustomTable::at(double a, double b) const
{
    const std::size_t nb = to_grid.size();
    a = std::clamp(a, from_grid.front(), from_grid.back());
    b = std::clamp(b, to_grid.front(), to_grid.back());
    auto [i, i2] = grid_cells(from_grid, Interval{a});
    auto [j, j2] = grid_cells(to_grid, Interval{b});
    (void)i2;
    (void)j2;
    const double u = (a - from_grid[i]) / (from_grid[i + 1] - from_grid[i]);
    const double v = (b - to_grid[j]) / (to_grid[j + 1] - to_grid[j]);
    const double f00 = values[i * nb + j];
    const double f01 = values[i * nb + j + 1];
    const double f10 = values[(i + 1) * nb + j];
    const double f11 = values[(i + 1) * nb + j + 1];
    return (1 - u) * (1 - v) * f00 + (1 - u) * v * f01 + u * (1 - v) * f10 + u * v * f11;
}

Interval CustomTable::enclose(Interval a, Interval b) const
{
    const std::size_t nb = to_grid.size();
    auto [i0, i1] = grid_cells(from_grid, a);
    auto [j0, j1] = grid_cells(to_grid, b);
    double lo = INFINITY;
    double hi = -INFINITY;
    for (std::size_t i = i0; i <= i1 + 1; ++i) {
        for (std::size_t j = j0; j <= j1 + 1; ++j) {
            lo = std::min(lo, values[i * nb + j]);
            hi = std::max(hi, values[i * nb + j]);
        }
    }
    return {lo, hi};
}

std::string CustomTable::validate() const
{
    if (from_grid.size() < 2 || to_grid.size() < 2) return "flow table needs at least two grid points per axis";
    if (values.size() != from_grid.size() * to_grid.size()) return "flow table value count must match the grid";
    if (!strictly_increasing(from_grid) || !strictly_increasing(to_grid))
        return "flow table grid must be strictly increasing";
    if (!all_finite(from_grid) || !all_finite(to_grid) || !all_finite(values)) return "flow table must be finite";
    return {};
}

PhysicsKind physics_kind(const Physics& p) { return static_cast<PhysicsKind>(p.index()); }

const char* physics_name(PhysicsKind k)
{
    switch (k) {
    case PhysicsKind::GasWeymouth: return "gas";
    case PhysicsKind::AcPowerVoltage: return "ac_power";
    case PhysicsKind::AcCurrentVoltage: return "ac_current";
    case PhysicsKind::Dissipative: return "dissipative";
    case PhysicsKind::CustomTable: return "table";
    }
    return "?";
}

std::size_t physics_components(const Physics& p)
{
    const PhysicsKind k = physics_kind(p);
    return k == PhysicsKind::AcPowerVoltage || k == PhysicsKind::AcCurrentVoltage ? 2 : 1;
}

bool physics_is_monotone(const Physics& p)
{
    const PhysicsKind k = physics_kind(p);
    return k == PhysicsKind::GasWeymouth || k == PhysicsKind::Dissipative;
}

Box EdgeSpec::reverse_domain() const
{
    if (!reverse_flow_domain.empty()) return reverse_flow_domain;
    Box out;
    out.reserve(flow_domain.size());
    for (const Interval& d : flow_domain) out.push_back(-d);
    return out;
}

const char* objective_name(ObjectiveMode m)
{
    switch (m) {
    case ObjectiveMode::MinCost: return "min_cost";
    case ObjectiveMode::DistributionLoss: return "distribution_loss";
    case ObjectiveMode::OptimalGas: return "optimal_gas";
    case ObjectiveMode::StateEstimation: return "state_estimation";
    }
    return "?";
}

std::optional<ObjectiveMode> parse_objective(const std::string& s)
{
    for (ObjectiveMode m : {ObjectiveMode::MinCost, ObjectiveMode::DistributionLoss, ObjectiveMode::OptimalGas,
                            ObjectiveMode::StateEstimation})
        if (s == objective_name(m)) return m;
    return std::nullopt;
}

std::optional<std::size_t> Network::find_node(const std::string& id) const
{
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].id == id) return i;
    return std::nullopt;
}

std::size_t Network::node_index(const std::string& id) const
{
    if (auto i = find_node(id)) return *i;
    throw InputError("unknown node '" + id + "'");
}

std::size_t Network::slack() const
{
    if (slack_ids.size() != 1) throw InputError("network must have exactly one slack node");
    return node_index(slack_ids.front());
}

bool ValidationReport::has(const std::string& fragment) const
{
    return std::any_of(violations.begin(), violations.end(),
                       [&](const Violation& v) { return v.message.find(fragment) != std::string::npos; });
}

std::string ValidationReport::to_string() const
{
    std::ostringstream os;
    for (const Violation& v : violations) os << v.where << ": " << v.message << '\n';
    return os.str();
}

ValidationReport validate_network(const Network& net)
{
    ValidationReport rep;
    auto add = [&](std::string where, std::string msg) { rep.violations.push_back({std::move(where), std::move(msg)}); };
    const std::size_t K = net.components;

    auto check_box = [&](const std::string& where, const char* what, const Box& box) {
        if (box.size() != K) {
            add(where, std::string(what) + " must have " + std::to_string(K) + " component(s)");
            return;
        }
        for (const Interval& x : box) {
            if (!x.is_finite()) add(where, std::string(what) + " must be finite");
            else if (x.is_empty()) add(where, std::string(what) + " must be nonempty (lower <= upper)");
        }
    };

    if (K == 0) add("network", "component count must be at least 1");

    std::set<std::string> ids;
    for (const NodeSpec& n : net.nodes) {
        const std::string where = "node '" + n.id + "'";
        if (n.id.empty()) add("node", "node id must be nonempty");
        if (!ids.insert(n.id).second) add(where, "duplicate node id");
        check_box(where, "injection domain", n.injection);
        check_box(where, "potential domain", n.potential);
        if (n.cost.size() != K) add(where, "cost must have one entry per component");
        for (const CostFunction& c : n.cost)
            if (auto err = c.validate(); !err.empty()) add(where, err);
    }

    if (net.slack_ids.size() != 1) {
        add("network", "exactly one slack node is required");
    }
    for (const std::string& s : net.slack_ids) {
        auto idx = net.find_node(s);
        if (!idx) {
            add("slack", "slack node '" + s + "' does not exist");
            continue;
        }
        for (const Interval& p : net.nodes[*idx].potential)
            if (!p.is_singleton()) add("node '" + s + "'", "slack potential must be a singleton");
    }

    // Undirected adjacency shared by edges and transform links.
    std::set<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<std::vector<std::size_t>> adj(net.nodes.size());
    auto link = [&](const std::string& where, std::size_t a, std::size_t b) {
        if (a == b) {
            add(where, "self-loops are not allowed");
            return;
        }
        if (!pairs.insert({std::min(a, b), std::max(a, b)}).second) add(where, "duplicate undirected edge");
        adj[a].push_back(b);
        adj[b].push_back(a);
    };

    for (std::size_t e = 0; e < net.edges.size(); ++e) {
        const EdgeSpec& edge = net.edges[e];
        const std::string where = "edge " + std::to_string(e) + " (" + edge.from + "->" + edge.to + ")";
        auto a = net.find_node(edge.from);
        auto b = net.find_node(edge.to);
        if (!a) add(where, "endpoint '" + edge.from + "' does not exist");
        if (!b) add(where, "endpoint '" + edge.to + "' does not exist");
        if (a && b) link(where, *a, *b);
        check_box(where, "flow domain", edge.flow_domain);
        if (!edge.reverse_flow_domain.empty()) check_box(where, "reverse flow domain", edge.reverse_flow_domain);
        if (physics_components(edge.physics) != K)
            add(where, std::string(physics_name(physics_kind(edge.physics))) + " physics needs " +
                           std::to_string(physics_components(edge.physics)) + " component(s)");
        std::visit(overloaded{
                       [&](const GasWeymouth& g) {
                           if (!(g.gamma > 0.0) || !std::isfinite(g.gamma))
                               add(where, "gas conductance must be positive");
                           if (!std::isfinite(g.offset)) add(where, "gas compression offset must be finite");
                       },
                       [&](const AcPowerVoltage& z) {
                           if (!std::isfinite(z.resistance) || !std::isfinite(z.reactance))
                               add(where, "impedance must be finite");
                           else if (mod2(z.resistance, z.reactance) == 0.0) add(where, "impedance must be nonzero");
                       },
                       [&](const AcCurrentVoltage& z) {
                           if (!std::isfinite(z.resistance) || !std::isfinite(z.reactance))
                               add(where, "impedance must be finite");
                           else if (mod2(z.resistance, z.reactance) == 0.0) add(where, "impedance must be nonzero");
                       },
                       [&](const Dissipative& d) {
                           if (auto err = d.law.validate(); !err.empty()) add(where, err);
                       },
                       [&](const CustomTable& t) {
                           if (auto err = t.validate(); !err.empty()) add(where, err);
                       },
                   },
                   edge.physics);
    }

    for (const NodeSpec& n : net.nodes) {
        if (!n.transform) continue;
        const TransformSpec& t = *n.transform;
        const std::string where = "transform at node '" + n.id + "'";
        auto a = net.find_node(n.id);
        auto b = net.find_node(t.out);
        if (!b) add(where, "out node '" + t.out + "' does not exist");
        if (a && b) link(where, *a, *b);
        check_box(where, "flow domain", t.flow_domain);
        switch (t.kind) {
        case TransformSpec::Kind::Multiplicative:
            if (t.coefficient.size() != std::min<std::size_t>(K, 2) || K > 2)
                add(where, "multiplicative transform needs one real or one complex coefficient");
            else if (!all_finite(t.coefficient))
                add(where, "transform coefficient must be finite");
            else if (K == 1 && !t.ratio_domain && !(t.coefficient[0] > 0.0))
                add(where, "multiplicative coefficient must be positive");
            if (t.ratio_domain) {
                if (K != 1) add(where, "decision ratios are supported for one component only");
                if (!t.ratio_domain->is_finite() || t.ratio_domain->is_empty() || !(t.ratio_domain->lo > 0.0))
                    add(where, "ratio domain must be a finite positive interval");
                if (auto err = t.ratio_cost.validate(); !err.empty()) add(where, err);
            }
            break;
        case TransformSpec::Kind::Additive:
            if (t.coefficient.size() != K) add(where, "additive transform needs one offset per component");
            else if (!all_finite(t.coefficient)) add(where, "transform coefficient must be finite");
            break;
        case TransformSpec::Kind::Tabulated:
            if (K != 1) add(where, "tabulated transforms support one component only");
            if (t.table_x.empty() || t.table_x.size() != t.table_y.size())
                add(where, "tabulated transform needs matching, nonempty x and y");
            else if (!all_finite(t.table_x) || !all_finite(t.table_y) || !strictly_increasing(t.table_x))
                add(where, "tabulated transform x must be finite and strictly increasing");
            break;
        }
        if (t.ratio_domain && t.kind != TransformSpec::Kind::Multiplicative)
            add(where, "ratio domain requires a multiplicative transform");
    }

    for (std::size_t i = 0; i < net.nodes.size(); ++i)
        if (adj[i].empty() && net.nodes.size() > 1) add("node '" + net.nodes[i].id + "'", "node has no incident edges");

    if (!net.nodes.empty()) {
        std::vector<char> seen(net.nodes.size(), 0);
        std::vector<std::size_t> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            const std::size_t u = stack.back();
            stack.pop_back();
            for (std::size_t v : adj[u])
                if (!seen[v]) seen[v] = 1, stack.push_back(v);
        }
        if (std::count(seen.begin(), seen.end(), 0) > 0) add("network", "network must be connected");
    } else {
        add("network", "network has no nodes");
    }

    for (std::size_t a = 0; a < net.aggregators.size(); ++a) {
        const AggregatorSpec& g = net.aggregators[a];
        const std::string where = "aggregator " + std::to_string(a);
        if (g.members.size() < 2) add(where, "aggregator needs at least two members");
        std::set<std::string> uniq(g.members.begin(), g.members.end());
        if (uniq.size() != g.members.size()) add(where, "aggregator members must be distinct");
        for (const std::string& m : g.members) {
            if (!net.find_node(m)) add(where, "member '" + m + "' does not exist");
            else if (std::find(net.slack_ids.begin(), net.slack_ids.end(), m) != net.slack_ids.end())
                add(where, "member '" + m + "' is the slack node and has no injection variable");
        }
        if (!(g.lower >= 0.0) || !(g.lower <= g.upper)) add(where, "aggregator bounds need 0 <= lower <= upper");
        if (g.component >= K) add(where, "aggregator component out of range");
    }

    for (std::size_t m = 0; m < net.measurements.size(); ++m) {
        const Measurement& meas = net.measurements[m];
        const std::string where = "measurement " + std::to_string(m);
        if (!net.find_node(meas.node)) add(where, "node '" + meas.node + "' does not exist");
        if (meas.kind == Measurement::Kind::Flow) {
            auto a = net.find_node(meas.node);
            auto b = net.find_node(meas.to);
            if (!b) add(where, "node '" + meas.to + "' does not exist");
            else if (a && !pairs.count({std::min(*a, *b), std::max(*a, *b)}))
                add(where, "flow measurement must name an existing edge");
        }
        if (meas.value.size() != K) add(where, "measurement needs one value per component");
        if (!all_finite(meas.value)) add(where, "measurement values must be finite");
    }
    return rep;
}

std::vector<double> edge_flow(const EdgeSpec& edge, std::span<const double> pi_from, std::span<const double> pi_to,
                              Direction dir)
{
    require_finite(pi_from);
    require_finite(pi_to);
    const bool fwd = dir == Direction::Forward;
    return std::visit(
        overloaded{
            [&](const GasWeymouth& g) -> std::vector<double> {
                // The sending node's potential enters with +, b is attached to
                // the forward orientation; reverse is -f_ij(pi_to, pi_from).
                if (fwd) return {g.gamma * gas_root(pi_from[0] - pi_to[0] + g.offset)};
                return {-g.gamma * gas_root(pi_to[0] - pi_from[0] + g.offset)};
            },
            [&](const AcPowerVoltage& z) -> std::vector<double> {
                const double e = pi_from[0], f = pi_from[1], c = pi_to[0], d = pi_to[1];
                const double m = mod2(z.resistance, z.reactance);
                const double G = z.resistance / m, B = z.reactance / m;
                // V_i (V_i - V_j)^* / z^*
                const double wr = e * e + f * f - e * c - f * d;
                const double wi = e * d - f * c;
                return {wr * G - wi * B, wr * B + wi * G};
            },
            [&](const AcCurrentVoltage& z) -> std::vector<double> {
                const double m = mod2(z.resistance, z.reactance);
                const double g = z.resistance / m, s = -z.reactance / m;
                const double dr = pi_from[0] - pi_to[0], di = pi_from[1] - pi_to[1];
                return {dr * g - di * s, dr * s + di * g};
            },
            [&](const Dissipative& d) -> std::vector<double> {
                if (fwd) return {d.law(pi_from[0] - pi_to[0])};
                return {-d.law(pi_to[0] - pi_from[0])};
            },
            [&](const CustomTable& t) -> std::vector<double> {
                if (fwd) return {t.at(pi_from[0], pi_to[0])};
                return {-t.at(pi_to[0], pi_from[0])};
            },
        },
        edge.physics);
}

Box edge_flow_enclosure(const EdgeSpec& edge, std::span<const Interval> box_from, std::span<const Interval> box_to,
                        Direction dir)
{
    require_finite(box_from);
    require_finite(box_to);
    const bool fwd = dir == Direction::Forward;
    return std::visit(
        overloaded{
            [&](const GasWeymouth& g) -> Box {
                auto image = [&](Interval d) { return g.gamma * Interval{gas_root(d.lo), gas_root(d.hi)}; };
                if (fwd) return {image(box_from[0] - box_to[0] + Interval{g.offset})};
                return {-image(box_to[0] - box_from[0] + Interval{g.offset})};
            },
            [&](const AcPowerVoltage& z) -> Box {
                const Interval e = box_from[0], f = box_from[1], c = box_to[0], d = box_to[1];
                const double m = mod2(z.resistance, z.reactance);
                const double G = z.resistance / m, B = z.reactance / m;
                const Interval wr = sqr(e) + sqr(f) - e * c - f * d;
                const Interval wi = e * d - f * c;
                return {wr * G - wi * B, wr * B + wi * G};
            },
            [&](const AcCurrentVoltage& z) -> Box {
                const double m = mod2(z.resistance, z.reactance);
                const double g = z.resistance / m, s = -z.reactance / m;
                const Interval dr = box_from[0] - box_to[0], di = box_from[1] - box_to[1];
                return {dr * g - di * s, dr * s + di * g};
            },
            [&](const Dissipative& d) -> Box {
                if (fwd) return {d.law.image(box_from[0] - box_to[0])};
                return {-d.law.image(box_to[0] - box_from[0])};
            },
            [&](const CustomTable& t) -> Box {
                if (fwd) return {t.enclose(box_from[0], box_to[0])};
                return {-t.enclose(box_to[0], box_from[0])};
            },
        },
        edge.physics);
}

std::vector<double> apply_transform(const TransformSpec& spec, std::span<const double> pi_in,
                                    std::optional<double> ratio)
{
    require_finite(pi_in);
    switch (spec.kind) {
    case TransformSpec::Kind::Multiplicative: {
        if (pi_in.size() == 2) {
            const double ar = spec.coefficient.at(0), ai = spec.coefficient.at(1);
            return {ar * pi_in[0] - ai * pi_in[1], ar * pi_in[1] + ai * pi_in[0]};
        }
        const double alpha = ratio.value_or(spec.coefficient.empty() ? 1.0 : spec.coefficient[0]);
        if (!(alpha > 0.0)) throw InputError("multiplicative compression coefficient must be positive");
        return {alpha * pi_in[0]};
    }
    case TransformSpec::Kind::Additive: {
        std::vector<double> out(pi_in.begin(), pi_in.end());
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += spec.coefficient.at(k);
        return out;
    }
    case TransformSpec::Kind::Tabulated:
        return {interpolate(spec.table_x, spec.table_y, pi_in[0])};
    }
    return {};
}

Box transform_enclosure(const TransformSpec& spec, std::span<const Interval> box_in, std::optional<Interval> ratio)
{
    require_finite(box_in);
    switch (spec.kind) {
    case TransformSpec::Kind::Multiplicative: {
        if (box_in.size() == 2) {
            const double ar = spec.coefficient.at(0), ai = spec.coefficient.at(1);
            return {ar * box_in[0] - ai * box_in[1], ar * box_in[1] + ai * box_in[0]};
        }
        const Interval alpha = ratio.value_or(Interval{spec.coefficient.empty() ? 1.0 : spec.coefficient[0]});
        return {alpha * box_in[0]};
    }
    case TransformSpec::Kind::Additive: {
        Box out(box_in.begin(), box_in.end());
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += Interval{spec.coefficient.at(k)};
        return out;
    }
    case TransformSpec::Kind::Tabulated:
        return {interpolate_range(spec.table_x, spec.table_y, box_in[0])};
    }
    return {};
}

}  // namespace pcnf
