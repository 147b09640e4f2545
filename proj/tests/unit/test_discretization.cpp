#include <algorithm>
#include <random>

#include "doctest.h"
#include "pcnf/discretization.hpp"
#include "pcnf/errors.hpp"
#include "support/instances.hpp"

using namespace pcnf;

namespace {

std::size_t factor_named(const FactorGraph& gm, const std::string& name)
{
    for (std::size_t f = 0; f < gm.num_factors(); ++f)
        if (gm.factors[f].name == name) return f;
    FAIL("no factor " << name);
    return npos;
}

std::size_t scalar_named(const FactorGraph& gm, const std::string& name)
{
    for (std::size_t s = 0; s < gm.num_scalars(); ++s)
        if (gm.scalars[s].name == name) return s;
    FAIL("no scalar " << name);
    return npos;
}

bool has_tuple(const FactorTable& t, const std::vector<std::uint32_t>& labels)
{
    for (std::size_t i = 0; i < t.size(); ++i)
        if (std::equal(labels.begin(), labels.end(), t.tuple(i).begin())) return true;
    return false;
}

// Labels of the cells containing a point, one per block of the factor.
std::vector<std::uint32_t> labels_at(const FactorGraph& gm, const Partition& p, const LabelSpace& ls,
                                     std::size_t f, const std::vector<double>& x)
{
    std::vector<std::uint32_t> out;
    for (std::size_t b : gm.factors[f].blocks) {
        std::vector<std::size_t> cells;
        for (std::size_t s : gm.blocks[b].scalars) cells.push_back(p.locate(s, x[s]));
        out.push_back(ls.encode(b, cells));
    }
    return out;
}

Network single_cost_node(CostFunction cost, Interval injection)
{
    Network net = testing::analytic_two_node();
    net.nodes[1].cost = {std::move(cost)};
    net.nodes[1].injection = {injection};
    return net;
}

}  // namespace

TEST_CASE("uniform partitions")
{
    CHECK(partition_uniform(Interval{0.0, 1.0}, 2) == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(partition_uniform(Interval{5.0}, 7) == std::vector<double>{5.0, 5.0});
    const auto b = partition_uniform(Interval{-1.0, 3.0}, 4);
    REQUIRE(b.size() == 5);
    for (std::size_t a = 0; a + 1 < b.size(); ++a) CHECK(b[a + 1] - b[a] == 1.0);
    CHECK_THROWS_AS((void)partition_uniform(Interval{0.0, 1.0}, 0), InputError);
    CHECK_THROWS_AS((void)partition_uniform(Interval{0.0, INFINITY}, 3), InputError);

    const FactorGraph gm = build_gm(testing::analytic_two_node());
    const Partition p = partition_uniform(gm, 3);
    CHECK(check_partition(p, gm.domains()).empty());
    CHECK(p.cells(scalar_named(gm, "pi_0_1")) == 1);
    CHECK(p.cells(scalar_named(gm, "q_1")) == 3);
}

TEST_CASE("refinement")
{
    Partition p{{{0.0, 1.0}}};
    p = refine(p, 0, 0);
    CHECK(p.breaks[0] == std::vector<double>{0.0, 0.5, 1.0});
    p = refine(p, 0, 0);
    CHECK(p.breaks[0] == std::vector<double>{0.0, 0.25, 0.5, 1.0});
    CHECK(check_partition(p, {Interval{0.0, 1.0}}).empty());
    CHECK(p.locate(0, 0.25) == 0);
    CHECK(p.locate(0, 0.3) == 1);
    CHECK(p.locate(0, 1.0) == 2);

    const Partition single{{{5.0, 5.0}}};
    CHECK_THROWS_WITH_AS((void)refine(single, 0, 0), doctest::Contains("zero-width"), InputError);
}

TEST_CASE("lower-bound tables of unary costs")
{
    {
        const FactorGraph gm = build_gm(single_cost_node(CostFunction::quadratic(0.0, 0.0, 1.0), {-1.0, 1.0}));
        const std::size_t c = factor_named(gm, "C_1");
        CHECK(lower_bound_table(gm, partition_uniform(gm, 2), c).cost == std::vector<double>{0.0, 0.0});
        CHECK(lower_bound_table(gm, partition_uniform(gm, 4), c).cost == std::vector<double>{0.25, 0.0, 0.0, 0.25});
    }
    {
        // (q - 1)^2 with cells [0, 1], [1, 2]
        const FactorGraph gm = build_gm(single_cost_node(CostFunction::quadratic(1.0, -2.0, 1.0), {0.0, 2.0}));
        CHECK(lower_bound_table(gm, partition_uniform(gm, 2), factor_named(gm, "C_1")).cost ==
              std::vector<double>{0.0, 0.0});
    }
}

TEST_CASE("lower-bound tables are sound for random cubic costs")
{
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> U(-2.0, 2.0), T(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const auto cubic = CostFunction::polynomial({U(rng), U(rng), U(rng), U(rng)});
        const FactorGraph gm = build_gm(single_cost_node(cubic, {-2.0, 2.0}));
        const std::size_t c = factor_named(gm, "C_1");
        // Random breakpoints.
        Partition p = partition_uniform(gm, 1);
        const std::size_t q = scalar_named(gm, "q_1");
        std::vector<double> br{-2.0, 2.0};
        for (int k = 0; k < 4; ++k) br.push_back(U(rng));
        std::sort(br.begin(), br.end());
        p.breaks[q] = br;
        const FactorTable tab = lower_bound_table(gm, p, c);
        REQUIRE(tab.size() == p.cells(q));
        for (std::size_t a = 0; a < tab.size(); ++a) {
            const Interval cell = p.cell(q, tab.tuple(a)[0]);
            double sampled = INFINITY;
            for (int s = 0; s < 10000; ++s) sampled = std::min(sampled, cubic(cell.lo + T(rng) * cell.width()));
            CHECK(tab.cost[a] <= sampled + 1e-12);
        }
    }
}

TEST_CASE("edge-law feasible tuples")
{
    Network net = testing::analytic_two_node();
    const FactorGraph gm = build_gm(net);
    Partition p = partition_uniform(gm, 1);
    p.breaks[scalar_named(gm, "pi_0_1")] = {0.0, 4.0};
    p.breaks[scalar_named(gm, "pi_1_0")] = {0.0, 4.0};
    p.breaks[scalar_named(gm, "phi_0_1")] = {-4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0, 4.0};
    p.breaks[scalar_named(gm, "phi_1_0")] = {-4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0, 4.0};
    const FactorTable tab = feasible_tuples(gm, p, factor_named(gm, "E_0_1"));
    // End labels are the flow cell (one potential cell). The enclosure is [-2, 2].
    for (std::size_t i = 0; i < tab.size(); ++i) {
        CHECK(tab.tuple(i)[0] != 7);  // phi_01 in [3, 4]
        CHECK(tab.tuple(i)[1] != 0);  // phi_10 in [-4, -3]
    }
    CHECK(has_tuple(tab, {5, 2}));  // phi_01 in [1, 2], phi_10 in [-2, -1]
    CHECK_FALSE(has_tuple(tab, {5, 5}));
}

TEST_CASE("node-law inclusion")
{
    const FactorGraph gm = build_gm(testing::analytic_two_node());
    Partition p = partition_uniform(gm, 1);
    p.breaks[scalar_named(gm, "q_1")] = {0.0, 1.0};
    p.breaks[scalar_named(gm, "phi_1_0")] = {0.0, 1.0};
    const FactorTable tab = feasible_tuples(gm, p, factor_named(gm, "N_1"));
    CHECK(tab.size() == 1);
}

TEST_CASE("edge-law tuples contain every exactly feasible point")
{
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> T(0.0, 1.0);
    for (int trial = 0; trial < 12; ++trial) {
        testing::RandomNetOptions opt;
        opt.nodes = 3;
        opt.family = trial % 2 ? testing::Family::Dissipative : testing::Family::Gas;
        opt.potential_spread = 0.3;
        const FactorGraph gm = build_gm(testing::random_network(rng, opt));
        const Partition p = partition_uniform(gm, 5);
        const LabelSpace ls(gm, p);
        for (std::size_t f = 0; f < gm.num_factors(); ++f) {
            if (gm.factors[f].kind != FactorKind::EdgeLaw) continue;
            const FactorTable tab = feasible_tuples(gm, p, f);
            const auto scope = gm.scope(f);
            const EdgeSpec& e = gm.net.edges[gm.links[gm.factors[f].link].index];
            int checked = 0;
            for (int s = 0; s < 3000; ++s) {
                std::vector<double> x(gm.num_scalars(), 0.0);
                const Interval da = gm.scalars[scope[0]].domain, db = gm.scalars[scope[2]].domain;
                const double pa = da.lo + T(rng) * da.width(), pb = db.lo + T(rng) * db.width();
                const double fa = edge_flow(e, std::vector<double>{pa}, std::vector<double>{pb}, Direction::Forward)[0];
                const double fb = edge_flow(e, std::vector<double>{pb}, std::vector<double>{pa}, Direction::Reverse)[0];
                if (!gm.scalars[scope[1]].domain.contains(fa) || !gm.scalars[scope[3]].domain.contains(fb)) continue;
                x[scope[0]] = pa, x[scope[1]] = fa, x[scope[2]] = pb, x[scope[3]] = fb;
                CHECK(has_tuple(tab, labels_at(gm, p, ls, f, x)));
                ++checked;
            }
            CHECK(checked > 0);
        }
    }
}

TEST_CASE("label space encoding")
{
    const FactorGraph gm = build_gm(testing::gas_star(2));
    const Partition p = partition_uniform(gm, 3);
    const LabelSpace ls(gm, p);
    for (std::size_t b = 0; b < gm.num_blocks(); ++b) {
        std::size_t expected = 1;
        for (std::size_t s : gm.blocks[b].scalars) expected *= p.cells(s);
        CHECK(ls.labels(b) == expected);
        for (std::uint32_t a = 0; a < ls.labels(b); ++a) {
            std::vector<std::size_t> cells;
            for (std::size_t k = 0; k < gm.blocks[b].scalars.size(); ++k) cells.push_back(ls.cell_of(b, a, k));
            CHECK(ls.encode(b, cells) == a);
            const auto box = ls.box(b, a);
            for (std::size_t k = 0; k < box.size(); ++k) CHECK(box[k] == p.cell(gm.blocks[b].scalars[k], cells[k]));
        }
    }
}

TEST_CASE("pruned tables keep the planted state")
{
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 24; ++trial) {
        testing::RandomNetOptions opt;
        opt.nodes = 3 + trial % 4;
        opt.cycle = trial % 3 == 0;
        opt.family = trial % 2 ? testing::Family::Dissipative : testing::Family::Gas;
        testing::PlantedState state;
        const FactorGraph gm = build_gm(testing::random_network(rng, opt, &state));
        const auto x = testing::planted_point(gm, state);
        const Partition p = partition_uniform(gm, trial % 2 ? 4 : 3);
        const Tables pruned = build_tables(gm, p);
        TableOptions raw_opt;
        raw_opt.prune = false;
        const Tables raw = build_tables(gm, p, raw_opt);
        CHECK_FALSE(pruned.infeasible);
        for (std::size_t f = 0; f < gm.num_factors(); ++f) {
            const auto labels = labels_at(gm, p, pruned.space, f, x);
            CHECK(has_tuple(pruned.factors[f], labels));
            CHECK(pruned.factors[f].size() <= raw.factors[f].size());
            for (std::size_t i = 0; i < pruned.factors[f].size(); ++i)
                for (std::size_t k = 0; k < pruned.factors[f].arity; ++k)
                    CHECK(pruned.alive[gm.factors[f].blocks[k]][pruned.factors[f].tuple(i)[k]]);
        }
    }
}

TEST_CASE("empty edge law makes the discretization infeasible")
{
    Network net = testing::analytic_two_node();
    net.edges[0].flow_domain = {Interval{5.0, 6.0}};
    const FactorGraph gm = build_gm(net);
    const Tables t = build_tables(gm, partition_uniform(gm, 4));
    CHECK(t.infeasible);
}
