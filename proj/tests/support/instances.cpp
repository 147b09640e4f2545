#include "support/instances.hpp"

#include "pcnf/discretization.hpp"
#include "pcnf/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace pcnf::testing {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Box around(std::mt19937_64& rng, double v, double halfwidth)
{
    return {Interval{v - halfwidth * uniform(rng, 0.2, 1.0), v + halfwidth * uniform(rng, 0.2, 1.0)}};
}

Network planted(std::mt19937_64& rng, std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                const RandomNetOptions& opt, PlantedState* state = nullptr)
{
    const bool gas = opt.family == Family::Gas;
    Network net;
    net.components = 1;
    net.slack_ids = {"0"};
    std::vector<double> pi(n);
    for (double& p : pi) p = gas ? uniform(rng, 20.0, 60.0) : uniform(rng, 0.0, 10.0);
    const double range = gas ? 40.0 : 10.0;

    std::vector<double> q(n, 0.0);
    for (auto [a, b] : pairs) {
        EdgeSpec e;
        const bool flip = uniform(rng, 0.0, 1.0) < 0.5;
        const std::size_t from = flip ? b : a, to = flip ? a : b;
        e.from = std::to_string(from);
        e.to = std::to_string(to);
        if (gas) {
            GasWeymouth g;
            g.gamma = uniform(rng, 0.5, 2.0);
            g.offset = uniform(rng, 0.0, 1.0) < 0.3 ? uniform(rng, 0.0, 2.0) : 0.0;
            e.physics = g;
        } else if (uniform(rng, 0.0, 1.0) < 0.7) {
            e.physics = Dissipative{MonotoneLaw::power(uniform(rng, 0.5, 2.0), uniform(rng, 0.5, 1.5))};
        } else {
            // Monotone table with a steeper middle section.
            const double s1 = uniform(rng, 0.2, 1.0), s2 = uniform(rng, 1.0, 3.0);
            e.physics = Dissipative{MonotoneLaw::table({-10.0, -1.0, 1.0, 10.0}, {-s2 - 9.0 * s1, -s2, s2, s2 + 9.0 * s1})};
        }
        const std::vector<double> pf{pi[from]}, pt{pi[to]};
        const double phi = edge_flow(e, pf, pt, Direction::Forward)[0];
        q[from] += phi;
        q[to] -= phi;
        if (state) state->flow.push_back(phi);
        e.flow_domain = around(rng, phi, opt.flow_spread * (std::abs(phi) + 1.0));
        net.edges.push_back(std::move(e));
    }
    for (std::size_t i = 0; i < n; ++i) {
        NodeSpec node;
        node.id = std::to_string(i);
        if (i == 0) {
            node.potential = {Interval{pi[i]}};
            node.injection = {Interval{-1e3, 1e3}};
            node.cost = {CostFunction::zero()};
        } else {
            node.potential = around(rng, pi[i], opt.potential_spread * range);
            if (gas) node.potential[0].lo = std::max(node.potential[0].lo, 0.0);
            node.injection = around(rng, q[i], opt.injection_spread * (std::abs(q[i]) + 1.0));
            const double c2 = uniform(rng, 0.1, 1.0);
            const double m = q[i] + uniform(rng, -1.0, 1.0) * (std::abs(q[i]) + 1.0);
            node.cost = {CostFunction::quadratic(c2 * m * m, -2.0 * c2 * m, c2)};
        }
        net.nodes.push_back(std::move(node));
    }
    if (state) {
        state->potential = pi;
        state->injection = q;
    }
    return net;
}

}  // namespace

Network random_network(std::mt19937_64& rng, const RandomNetOptions& opt, PlantedState* state)
{
    const std::size_t n = std::max<std::size_t>(opt.nodes, 2);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::set<std::pair<std::size_t, std::size_t>> used;
    for (std::size_t k = 1; k < n; ++k) {
        const std::size_t p = std::uniform_int_distribution<std::size_t>(0, k - 1)(rng);
        pairs.emplace_back(p, k);
        used.insert({p, k});
    }
    if (opt.cycle && n >= 3) {
        std::vector<std::pair<std::size_t, std::size_t>> free;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b)
                if (!used.count({a, b})) free.emplace_back(a, b);
        if (!free.empty()) pairs.push_back(free[std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(rng)]);
    }
    if (state) *state = {};
    return planted(rng, n, pairs, opt, state);
}

std::vector<double> planted_point(const FactorGraph& gm, const PlantedState& state)
{
    std::vector<std::vector<double>> pot, inj, flows;
    for (std::size_t i = 0; i < state.potential.size(); ++i) {
        pot.push_back({state.potential[i]});
        inj.push_back({state.injection[i]});
    }
    for (double phi : state.flow) flows.push_back({phi, -phi});
    return assemble_point(gm, pot, inj, flows);
}

std::vector<std::vector<double>> oracle_samples(const Network& net, std::mt19937_64& rng, std::size_t count,
                                                std::size_t t)
{
    std::vector<std::vector<double>> out;
    std::uniform_real_distribution<double> slope(-5.0, 5.0), curve(0.0, 2.0);
    const std::size_t slack = net.slack();
    for (std::size_t k = 0; k < count; ++k) {
        Network copy = net;
        for (std::size_t i = 0; i < copy.nodes.size(); ++i)
            if (i != slack) copy.nodes[i].cost = {CostFunction::quadratic(0.0, slope(rng), curve(rng))};
        const FactorGraph gm = build_gm(copy);
        const OracleResult r = grid_enumerate(gm, partition_uniform(gm, t), OracleMode::ContinuousApprox);
        if (r.found && r.feasible) out.push_back(r.point);
    }
    return out;
}

Network analytic_two_node()
{
    Network net;
    net.components = 1;
    net.slack_ids = {"0"};
    NodeSpec n0;
    n0.id = "0";
    n0.potential = {Interval{25.0}};
    n0.injection = {Interval{-10.0, 10.0}};
    n0.cost = {CostFunction::zero()};
    NodeSpec n1;
    n1.id = "1";
    n1.potential = {Interval{21.0, 25.0}};
    n1.injection = {Interval{-3.0, -1.0}};
    n1.cost = {CostFunction::quadratic(9.0, 6.0, 1.0)};
    net.nodes = {n0, n1};
    EdgeSpec e;
    e.from = "0";
    e.to = "1";
    e.physics = GasWeymouth{1.0, 0.0};
    e.flow_domain = {Interval{-3.0, 3.0}};
    net.edges = {e};
    return net;
}

Network gas_chain(std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t k = 1; k < n; ++k) pairs.emplace_back(k - 1, k);
    RandomNetOptions opt;
    opt.nodes = n;
    return planted(rng, n, pairs, opt);
}

Network path3_with_aggregator(std::mt19937_64& rng)
{
    RandomNetOptions opt;
    opt.nodes = 3;
    Network net = planted(rng, 3, {{0, 1}, {1, 2}}, opt);
    // Aggregate bounds around the sum of the injection-domain centres.
    const double s = net.nodes[1].injection[0].mid() + net.nodes[2].injection[0].mid();
    AggregatorSpec g;
    g.members = {"1", "2"};
    g.lower = std::max(0.0, std::abs(s) - uniform(rng, 0.5, 1.5));
    g.upper = std::abs(s) + uniform(rng, 0.0, 0.5);
    net.aggregators.push_back(g);
    return net;
}

Network gas_triangle()
{
    std::mt19937_64 rng(11);
    RandomNetOptions opt;
    opt.nodes = 3;
    return planted(rng, 3, {{0, 1}, {1, 2}, {0, 2}}, opt);
}

Network gas_star(std::size_t spokes)
{
    Network net;
    net.components = 1;
    net.slack_ids = {"0"};
    NodeSpec c;
    c.id = "c";
    c.potential = {Interval{10.0, 50.0}};
    c.injection = {Interval{-5.0, 5.0}};
    c.cost = {CostFunction::zero()};
    net.nodes.push_back(c);
    for (std::size_t k = 0; k < spokes; ++k) {
        NodeSpec leaf;
        leaf.id = std::to_string(k);
        leaf.potential = k == 0 ? Box{Interval{40.0}} : Box{Interval{10.0, 50.0}};
        leaf.injection = {Interval{-5.0, 5.0}};
        leaf.cost = {CostFunction::quadratic(0.0, 0.0, 1.0)};
        net.nodes.push_back(leaf);
        EdgeSpec e;
        e.from = "c";
        e.to = leaf.id;
        e.physics = GasWeymouth{1.0, 0.0};
        e.flow_domain = {Interval{-7.0, 7.0}};
        net.edges.push_back(e);
    }
    return net;
}

Network ac_two_bus(double r, double x)
{
    Network net;
    net.components = 2;
    net.slack_ids = {"0"};
    NodeSpec n0;
    n0.id = "0";
    n0.potential = {Interval{1.0}, Interval{0.0}};
    n0.injection = {Interval{-5.0, 5.0}, Interval{-5.0, 5.0}};
    n0.cost = {CostFunction::zero(), CostFunction::zero()};
    NodeSpec n1;
    n1.id = "1";
    n1.potential = {Interval{0.9, 1.1}, Interval{-0.1, 0.1}};
    n1.injection = {Interval{-0.5, 0.1}, Interval{-0.2, 0.2}};
    n1.cost = {CostFunction::quadratic(0.0, 0.0, 1.0), CostFunction::zero()};
    net.nodes = {n0, n1};
    EdgeSpec e;
    e.from = "0";
    e.to = "1";
    e.physics = AcPowerVoltage{r, x};
    e.flow_domain = {Interval{-2.0, 2.0}, Interval{-2.0, 2.0}};
    net.edges = {e};
    return net;
}

}  // namespace pcnf::testing
