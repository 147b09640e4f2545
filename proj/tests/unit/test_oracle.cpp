#include <random>

#include "doctest.h"
#include "pcnf/belief_lp.hpp"
#include "pcnf/errors.hpp"
#include "pcnf/oracle.hpp"
#include "pcnf/tree_dp.hpp"
#include "support/instances.hpp"

using namespace pcnf;

namespace {

std::size_t scalar_named(const FactorGraph& gm, const std::string& name)
{
    for (std::size_t s = 0; s < gm.num_scalars(); ++s)
        if (gm.scalars[s].name == name) return s;
    FAIL("no scalar " << name);
    return npos;
}

}  // namespace

TEST_CASE("one cost-only variable: oracle value is the smallest table entry")
{
    FactorGraph gm;
    gm.scalars.push_back({ScalarRole::Injection, 0, npos, 0, 0, Interval{-2.0, 3.0}, "q"});
    gm.blocks.push_back({BlockKind::Injection, 0, npos, npos, {0}, "q"});
    FactorNode f;
    f.kind = FactorKind::Cost;
    f.name = "C";
    f.blocks = {0};
    f.costs.push_back({CostTerm::Kind::Unary, CostFunction::quadratic(-1.0, -1.0, 1.0), {0}});
    gm.factors.push_back(f);
    gm.block_factors = {{0}};

    const Partition p = partition_uniform(gm, 5);
    const FactorTable t = lower_bound_table(gm, p, 0);
    const OracleResult r = grid_enumerate(gm, p, OracleMode::Discretized);
    REQUIRE(r.found);
    CHECK(r.value == *std::min_element(t.cost.begin(), t.cost.end()));
    CHECK(p.cell(0, r.cells[0]).contains(0.5));
}

TEST_CASE("continuous-approx recovers the analytic two-node state")
{
    const FactorGraph gm = build_gm(testing::analytic_two_node());
    const Partition p = partition_uniform(gm, 16);
    const std::size_t pi1 = scalar_named(gm, "pi_1_0");

    OracleOptions no_polish;
    no_polish.polish = false;
    const OracleResult mid = grid_enumerate(gm, p, OracleMode::ContinuousApprox, no_polish);
    REQUIRE(mid.found);
    CHECK(mid.feasible);
    // the best midpoint lies within one injection cell of q = -2
    CHECK(std::abs(mid.point[pi1] - 21.0) <= 4.0 * 2.0 / 16.0 + 1e-9);

    const OracleResult r = grid_enumerate(gm, p, OracleMode::ContinuousApprox);
    REQUIRE(r.found);
    CHECK(r.feasible);
    CHECK(r.residual <= 1e-9);
    CHECK(r.point[pi1] == doctest::Approx(21.0).epsilon(1e-6));
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.value <= mid.value);
}

TEST_CASE("oracle ordering on random trees")
{
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        CAPTURE(trial);
        testing::RandomNetOptions opt;
        opt.nodes = 3 + trial % 3;
        opt.family = trial % 2 == 0 ? testing::Family::Gas : testing::Family::Dissipative;
        const FactorGraph gm = build_gm(testing::random_network(rng, opt));
        const Partition p = partition_uniform(gm, 6);
        const Tables tables = build_tables(gm, p);
        REQUIRE_FALSE(tables.infeasible);
        const LPSolution lp = solve_lp(build_int_part_lp(gm, tables).lp);
        REQUIRE(lp.status == LPStatus::Optimal);
        const OracleResult d = grid_enumerate(gm, p, OracleMode::Discretized);
        REQUIRE(d.found);
        CHECK(lp.objective <= d.value + 1e-7);
        // on trees the relaxation is exact
        CHECK(std::abs(solve_tree(gm, p, tables).value - d.value) <= 1e-7);
        const OracleResult c = grid_enumerate(gm, p, OracleMode::ContinuousApprox);
        if (c.found) {
            CHECK(c.feasible);
            CHECK(d.value <= c.value + 1e-7);
        }
    }
}

TEST_CASE("continuous-approx handles a single cycle")
{
    std::mt19937_64 rng(41);
    testing::PlantedState state;
    testing::RandomNetOptions opt;
    opt.nodes = 4;
    opt.cycle = true;
    const FactorGraph gm = build_gm(testing::random_network(rng, opt, &state));
    CHECK(point_residual(gm, testing::planted_point(gm, state)) <= 1e-9);
    const Partition p = partition_uniform(gm, 4);
    const OracleResult c = grid_enumerate(gm, p, OracleMode::ContinuousApprox);
    REQUIRE(c.found);
    CHECK(c.feasible);
    const OracleResult d = grid_enumerate(gm, p, OracleMode::Discretized);
    REQUIRE(d.found);
    CHECK(d.value <= c.value + 1e-7);
}

TEST_CASE("discretized search finishes single cycles within a 10^6 node cap")
{
    std::mt19937_64 rng(1001);
    OracleOptions opt;
    opt.cap = 1'000'000;
    for (int trial = 0; trial < 12; ++trial) {
        CAPTURE(trial);
        testing::RandomNetOptions net;
        net.nodes = 5 + trial % 2;
        net.cycle = true;
        net.family = trial % 2 == 0 ? testing::Family::Gas : testing::Family::Dissipative;
        const FactorGraph gm = build_gm(testing::random_network(rng, net));
        const Partition p = partition_uniform(gm, 8);
        const OracleResult d = grid_enumerate(gm, p, OracleMode::Discretized, opt);
        REQUIRE(d.found);
    }
}

TEST_CASE("oracle cap")
{
    const FactorGraph gm = build_gm(testing::gas_chain(4));
    const Partition p = partition_uniform(gm, 8);
    OracleOptions opt;
    opt.cap = 10;
    CHECK_THROWS_WITH_AS((void)grid_enumerate(gm, p, OracleMode::Discretized, opt),
                         "instance too large for oracle", CapacityError);
    CHECK_THROWS_AS((void)grid_enumerate(gm, p, OracleMode::ContinuousApprox, opt), CapacityError);
}

TEST_CASE("oracle rejects AC physics and multi-cycle continuous mode")
{
    const FactorGraph ac = build_gm(testing::ac_two_bus(0.1, 0.2));
    CHECK_THROWS_AS((void)grid_enumerate(ac, partition_uniform(ac, 2), OracleMode::Discretized), InputError);

    // triangle plus a node joined to two corners: two independent cycles
    Network net = testing::gas_triangle();
    NodeSpec extra = net.nodes[2];
    extra.id = "3";
    net.nodes.push_back(extra);
    for (const char* other : {"1", "2"}) {
        EdgeSpec e = net.edges[0];
        e.from = other;
        e.to = "3";
        net.edges.push_back(e);
    }
    const FactorGraph gm = build_gm(net);
    CHECK_THROWS_AS((void)grid_enumerate(gm, partition_uniform(gm, 2), OracleMode::ContinuousApprox), InputError);
}

TEST_CASE("residual of the midpoint solution is reported honestly")
{
    const FactorGraph gm = build_gm(testing::analytic_two_node());
    const Partition p = partition_uniform(gm, 4);
    const OracleResult d = grid_enumerate(gm, p, OracleMode::Discretized);
    REQUIRE(d.found);
    CHECK(d.residual == doctest::Approx(point_residual(gm, d.point)));
    CHECK(d.feasible == (d.residual <= d.tolerance));
}
