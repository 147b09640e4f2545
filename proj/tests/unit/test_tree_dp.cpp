#include <random>
#include <set>

#include "doctest.h"
#include "pcnf/belief_lp.hpp"
#include "pcnf/errors.hpp"
#include "pcnf/tree_dp.hpp"
#include "support/instances.hpp"

using namespace pcnf;

namespace {

using TupleSet = std::set<std::vector<std::uint32_t>>;

std::vector<TupleSet> tuple_sets(const Tables& t)
{
    std::vector<TupleSet> out;
    for (const FactorTable& f : t.factors) {
        TupleSet s;
        for (std::size_t i = 0; i < f.size(); ++i) s.emplace(f.tuple(i).begin(), f.tuple(i).end());
        out.push_back(std::move(s));
    }
    return out;
}

// Cost of a complete block labelling, +inf when some factor rejects it.
double labelling_cost(const FactorGraph& gm, const Tables& t, const std::vector<TupleSet>& sets,
                      const std::vector<std::uint32_t>& labels)
{
    double total = 0.0;
    for (std::size_t f = 0; f < gm.num_factors(); ++f) {
        std::vector<std::uint32_t> tup;
        for (std::size_t b : gm.factors[f].blocks) tup.push_back(labels[b]);
        if (!sets[f].count(tup)) return INFINITY;
        const FactorTable& tab = t.factors[f];
        for (std::size_t i = 0; i < tab.size(); ++i)
            if (std::equal(tup.begin(), tup.end(), tab.tuple(i).begin())) {
                total += tab.cost[i];
                break;
            }
    }
    return total;
}

double lp_value(const FactorGraph& gm, const Tables& t)
{
    const LPSolution sol = solve_lp(build_int_part_lp(gm, t).lp);
    REQUIRE(sol.status == LPStatus::Optimal);
    return sol.objective;
}

}  // namespace

TEST_CASE("loopy graphs are rejected")
{
    const FactorGraph gm = build_gm(testing::gas_triangle());
    CHECK_THROWS_WITH_AS((void)root_tree(gm), "not a tree", InputError);
}

TEST_CASE("rooted tree structure")
{
    const FactorGraph gm = build_gm(testing::gas_chain(3));
    const RootedTree t = root_tree(gm, 0);
    REQUIRE(t.roots.size() == 1);
    CHECK(t.order.size() == gm.num_blocks() + gm.num_factors());
    CHECK(t.order.front() == 0);
    for (std::size_t u = 0; u < t.order.size(); ++u) {
        const std::size_t node = t.order[u];
        if (node == t.roots[0]) continue;
        const auto pos = std::find(t.order.begin(), t.order.end(), t.parent[node]);
        CHECK(pos < t.order.begin() + static_cast<std::ptrdiff_t>(u));
    }
}

TEST_CASE("messages match exhaustive minimization on the two-node instance")
{
    const FactorGraph gm = build_gm(testing::analytic_two_node());
    const Partition p = partition_uniform(gm, 8);
    const Tables tables = build_tables(gm, p, {.prune = false});
    const RootedTree tree = root_tree(gm, 0);
    const Messages msg = forward_pass(gm, tree, tables);
    const auto sets = tuple_sets(tables);

    // Every labelling of all blocks; the root kappa is the min over those
    // with the root fixed.
    const std::size_t B = gm.num_blocks();
    std::vector<double> brute(tables.space.labels(0), INFINITY);
    std::vector<std::uint32_t> labels(B, 0);
    std::size_t total = 1;
    for (std::size_t b = 0; b < B; ++b) total *= tables.space.labels(b);
    REQUIRE(total <= 100000);
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t r = idx;
        for (std::size_t b = 0; b < B; ++b) {
            labels[b] = static_cast<std::uint32_t>(r % tables.space.labels(b));
            r /= tables.space.labels(b);
        }
        const double v = labelling_cost(gm, tables, sets, labels);
        brute[labels[0]] = std::min(brute[labels[0]], v);
    }
    REQUIRE(msg.kappa[0].size() == brute.size());
    for (std::size_t a = 0; a < brute.size(); ++a) {
        CAPTURE(a);
        if (std::isinf(brute[a]))
            CHECK(std::isinf(msg.kappa[0][a]));
        else
            CHECK(msg.kappa[0][a] == doctest::Approx(brute[a]).epsilon(1e-12));
    }
}

TEST_CASE("tree solution is consistent and recomputes to its value")
{
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        testing::RandomNetOptions opt;
        opt.nodes = 3 + trial % 3;
        const FactorGraph gm = build_gm(testing::random_network(rng, opt));
        const Partition p = partition_uniform(gm, 4);
        const Tables tables = build_tables(gm, p);
        REQUIRE_FALSE(tables.infeasible);
        const TreeSolution sol = solve_tree(gm, p, tables);
        double total = 0.0;
        for (std::size_t f = 0; f < gm.num_factors(); ++f) {
            const std::size_t i = sol.assignment.tuples[f];
            REQUIRE(i != npos);
            const auto tup = tables.factors[f].tuple(i);
            for (std::size_t q = 0; q < gm.factors[f].blocks.size(); ++q)
                CHECK(tup[q] == sol.assignment.labels[gm.factors[f].blocks[q]]);
            total += tables.factors[f].cost[i];
        }
        CHECK(total == doctest::Approx(sol.value).epsilon(1e-12));
        CHECK(sol.representative.size() == gm.num_scalars());

        // any root gives the same optimum
        for (std::size_t root = 1; root < gm.num_blocks(); root += 2)
            CHECK(solve_tree(gm, p, tables, root).value == doctest::Approx(sol.value).epsilon(1e-12));
    }
}

TEST_CASE("tree DP equals the belief LP on trees")
{
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 6; ++trial) {
        CAPTURE(trial);
        testing::RandomNetOptions opt;
        opt.nodes = 3 + trial % 2;
        opt.family = trial % 2 == 0 ? testing::Family::Gas : testing::Family::Dissipative;
        const FactorGraph gm = build_gm(testing::random_network(rng, opt));
        const Partition p = partition_uniform(gm, 4);
        const Tables tables = build_tables(gm, p);
        REQUIRE_FALSE(tables.infeasible);
        CHECK(std::abs(solve_tree(gm, p, tables).value - lp_value(gm, tables)) <= 1e-7);
    }
}

TEST_CASE("empty table reports discretization infeasibility")
{
    Network net = testing::analytic_two_node();
    net.edges[0].flow_domain = {Interval{5.0, 6.0}};  // beyond sqrt(25 - 21)
    const FactorGraph gm = build_gm(net);
    const Partition p = partition_uniform(gm, 4);
    const Tables tables = build_tables(gm, p);
    REQUIRE(tables.infeasible);
    try {
        (void)solve_tree(gm, p, tables);
        FAIL("expected infeasibility");
    } catch (const InfeasibleError& e) {
        CHECK(e.kind() == InfeasibilityKind::Discretization);
        CHECK(std::string(e.what()).find("discretization-infeasible") != std::string::npos);
    }
}
