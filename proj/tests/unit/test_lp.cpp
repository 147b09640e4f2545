#include <random>
#include <set>

#include "doctest.h"
#include "pcnf/belief_lp.hpp"
#include "pcnf/errors.hpp"
#include "pcnf/lp.hpp"
#include "pcnf/lp_io.hpp"
#include "pcnf/oracle.hpp"
#include "pcnf/tree_dp.hpp"
#include "support/instances.hpp"

using namespace pcnf;

namespace {

LinearProgram normalization_lp(double c0, double c1)
{
    LinearProgram lp;
    const auto r = lp.add_row("n_i_x", 1.0);
    lp.add_entry(r, lp.add_col("b_i_x_0", c0), 1.0);
    lp.add_entry(r, lp.add_col("b_i_x_1", c1), 1.0);
    return lp;
}

// Feasible by construction (b = A x0 with x0 >= 0) and bounded (c >= 0).
LinearProgram random_lp(std::mt19937_64& rng)
{
    std::uniform_int_distribution<int> coef(-3, 3), rows(1, 4), cols(2, 8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    LinearProgram lp;
    const int m = rows(rng), n = cols(rng);
    std::vector<double> x0(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        lp.add_col("x" + std::to_string(j), std::round(u(rng) * 8.0) / 4.0);
        x0[static_cast<std::size_t>(j)] = u(rng) < 0.4 ? 0.0 : std::round(u(rng) * 4.0);
    }
    for (int i = 0; i < m; ++i) {
        std::vector<double> a(static_cast<std::size_t>(n));
        double b = 0.0;
        for (int j = 0; j < n; ++j) {
            a[static_cast<std::size_t>(j)] = coef(rng);
            b += a[static_cast<std::size_t>(j)] * x0[static_cast<std::size_t>(j)];
        }
        const auto r = lp.add_row("r" + std::to_string(i), b);
        for (int j = 0; j < n; ++j)
            if (a[static_cast<std::size_t>(j)] != 0.0) lp.add_entry(r, static_cast<std::size_t>(j), a[static_cast<std::size_t>(j)]);
    }
    return lp;
}

double plain_value(const FactorGraph& gm, const Partition& p)
{
    const Tables tables = build_tables(gm, p);
    REQUIRE_FALSE(tables.infeasible);
    const BeliefLP blp = build_int_part_lp(gm, tables);
    const LPSolution sol = solve_lp(blp.lp);
    REQUIRE(sol.status == LPStatus::Optimal);
    return sol.objective;
}

double hierarchy_value(const FactorGraph& gm, const Tables& tables, const HierarchyLevel& level,
                       HierarchyForm form = HierarchyForm::Reduced)
{
    const SuperNodeSet sn = generate_supernodes(gm, level);
    const BeliefLP blp = build_hierarchy_lp(gm, tables, sn, form);
    const LPSolution sol = solve_lp(blp.lp);
    REQUIRE(sol.status == LPStatus::Optimal);
    return sol.objective;
}

}  // namespace

TEST_CASE("normalization-only LP picks the cheaper label")
{
    const LinearProgram lp = normalization_lp(0.0, 0.5);
    const LPSolution sol = solve_lp(lp);
    REQUIRE(sol.status == LPStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(0.0));
    CHECK(sol.x[0] == doctest::Approx(1.0));
    CHECK(sol.x[1] == doctest::Approx(0.0));
    const VertexResult v = lp_vertex_enumerate(lp);
    REQUIRE(v.status == LPStatus::Optimal);
    CHECK(v.objective == doctest::Approx(0.0));
}

TEST_CASE("contradictory equalities are infeasible")
{
    LinearProgram lp;
    const auto c = lp.add_col("x", 1.0);
    lp.add_entry(lp.add_row("a", 1.0), c, 1.0);
    lp.add_entry(lp.add_row("b", 2.0), c, 1.0);
    CHECK(solve_lp(lp).status == LPStatus::Infeasible);
    CHECK(lp_vertex_enumerate(lp).status == LPStatus::Infeasible);

    LinearProgram neg;
    neg.add_entry(neg.add_row("a", -1.0), neg.add_col("x", 0.0), 1.0);
    CHECK(solve_lp(neg).status == LPStatus::Infeasible);
}

TEST_CASE("unbounded direction is detected")
{
    LinearProgram lp;
    const auto x = lp.add_col("x", -1.0), y = lp.add_col("y", 0.0);
    const auto r = lp.add_row("r", 0.0);
    lp.add_entry(r, x, 1.0);
    lp.add_entry(r, y, -1.0);
    CHECK(solve_lp(lp).status == LPStatus::Unbounded);
}

TEST_CASE("iteration cap raises a capacity error")
{
    std::mt19937_64 rng(3);
    LinearProgram lp;
    for (int j = 0; j < 6; ++j) lp.add_col("x" + std::to_string(j), 1.0 + j);
    for (int i = 0; i < 4; ++i) {
        const auto r = lp.add_row("r" + std::to_string(i), 1.0 + i);
        for (int j = 0; j < 6; ++j) lp.add_entry(r, static_cast<std::size_t>(j), 1.0 + ((i + j) % 3));
    }
    SimplexOptions opt;
    opt.max_iterations = 1;
    CHECK_THROWS_AS((void)solve_lp(lp, opt), CapacityError);
}

TEST_CASE("malformed LP is rejected")
{
    LinearProgram lp = normalization_lp(0.0, 1.0);
    lp.cols[0].push_back({7, 1.0});
    CHECK_THROWS_AS((void)solve_lp(lp), Error);
}

TEST_CASE("simplex matches vertex enumeration on random tiny LPs")
{
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        CAPTURE(trial);
        const LinearProgram lp = random_lp(rng);
        const LPSolution sol = solve_lp(lp);
        const VertexResult v = lp_vertex_enumerate(lp);
        REQUIRE(sol.status == LPStatus::Optimal);
        REQUIRE(v.status == LPStatus::Optimal);
        CHECK(std::abs(sol.objective - v.objective) <= 1e-9);
        CHECK(lp.residual(sol.x) <= 1e-9);
    }
}

// Beale's example, which cycles under textbook Dantzig pivoting.
// Optimum -5/4 at x4 = x6 = 1.
TEST_CASE("lexicographic ratio test solves Beale's cycling example")
{
    LinearProgram lp;
    const double c[7] = {0.0, 0.0, 0.0, -0.75, 20.0, -0.5, 6.0};
    for (int j = 0; j < 7; ++j) lp.add_col("x" + std::to_string(j + 1), c[j]);
    const double a[3][7] = {{1, 0, 0, 0.25, -8, -1, 9}, {0, 1, 0, 0.5, -12, -0.5, 3}, {0, 0, 1, 0, 0, 1, 0}};
    const double b[3] = {0.0, 0.0, 1.0};
    for (int i = 0; i < 3; ++i) {
        const auto r = lp.add_row("r" + std::to_string(i), b[i]);
        for (int j = 0; j < 7; ++j)
            if (a[i][j] != 0.0) lp.add_entry(r, static_cast<std::size_t>(j), a[i][j]);
    }
    for (std::size_t stall : {0, 1000}) {
        SimplexOptions opt;
        opt.stall_after = stall;
        const LPSolution sol = solve_lp(lp, opt);
        REQUIRE(sol.status == LPStatus::Optimal);
        CHECK(sol.objective == doctest::Approx(-1.25).epsilon(1e-12));
    }
}

TEST_CASE("degenerate-stall mode agrees with the default on belief LPs")
{
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 8; ++trial) {
        CAPTURE(trial);
        testing::RandomNetOptions opt;
        opt.nodes = 3 + trial % 3;
        opt.cycle = trial % 2 == 1;
        const FactorGraph gm = build_gm(testing::random_network(rng, opt));
        const Tables tables = build_tables(gm, partition_uniform(gm, 4));
        const LinearProgram lp = build_int_part_lp(gm, tables).lp;
        SimplexOptions lex;
        lex.stall_after = 0;
        const LPSolution a = solve_lp(lp), b = solve_lp(lp, lex);
        REQUIRE(a.status == LPStatus::Optimal);
        REQUIRE(b.status == LPStatus::Optimal);
        CHECK(std::abs(a.objective - b.objective) <= 1e-9 * std::max(1.0, std::abs(a.objective)));
        CHECK(lp.residual(b.x) <= 1e-9);
    }
}

TEST_CASE("vertex enumeration refuses large LPs")
{
    LinearProgram lp;
    for (int j = 0; j < 9; ++j) lp.add_col("x" + std::to_string(j), 1.0);
    CHECK_THROWS_AS((void)lp_vertex_enumerate(lp), CapacityError);
}

TEST_CASE("belief LP on the analytic two-node instance")
{
    const FactorGraph gm = build_gm(testing::analytic_two_node());
    const Partition p = partition_uniform(gm, 4);
    const Tables tables = build_tables(gm, p);
    const BeliefLP blp = build_int_part_lp(gm, tables);
    const LPSolution sol = solve_lp(blp.lp);
    REQUIRE(sol.status == LPStatus::Optimal);
    // a lower bound on the analytic optimum (q = -2, cost 1)
    CHECK(sol.objective <= 1.0 + 1e-9);
    CHECK(sol.objective >= 0.0);
    CHECK(blp.columns.size() == blp.lp.num_cols());

    const auto beliefs = block_beliefs(tables, blp, sol.x);
    for (std::size_t b = 0; b < beliefs.size(); ++b) {
        double total = 0.0;
        for (double v : beliefs[b]) total += v;
        CHECK(total == doctest::Approx(1.0));
    }
    const auto labels = belief_assignment(beliefs);
    CHECK(labels.size() == gm.num_blocks());
}

TEST_CASE("integrality report lists fractional beliefs")
{
    const std::vector<std::vector<double>> beliefs{{1.0, 0.0}, {0.5, 0.5}};
    const IntegralityReport r = check_integrality(beliefs);
    CHECK_FALSE(r.integral);
    REQUIRE(r.fractional.size() == 2);
    CHECK(r.fractional[0].block == 1);
    CHECK(check_integrality({{0.0, 1.0}}).integral);
    CHECK(belief_assignment(beliefs) == std::vector<std::uint32_t>{0, 0});
}

TEST_CASE("hierarchy level parsing")
{
    CHECK(parse_hierarchy_level("minimal").kind == HierarchyLevel::Kind::Minimal);
    CHECK(parse_hierarchy_level("full").kind == HierarchyLevel::Kind::Full);
    const HierarchyLevel s = parse_hierarchy_level("size:3");
    CHECK(s.kind == HierarchyLevel::Kind::SizeT);
    CHECK(s.t == 3);
    CHECK(parse_hierarchy_level("size_t=2").t == 2);
    CHECK(hierarchy_level_name(s) == "size:3");
    CHECK_THROWS_AS((void)parse_hierarchy_level("sizes"), InputError);
    CHECK_THROWS_AS((void)parse_hierarchy_level("size:0"), InputError);
}

TEST_CASE("hierarchy values are ordered and the full level is exact")
{
    const FactorGraph gm = build_gm(testing::gas_triangle());
    const Partition p = partition_uniform(gm, 2);
    const Tables tables = build_tables(gm, p);
    REQUIRE_FALSE(tables.infeasible);
    const double plain = solve_lp(build_int_part_lp(gm, tables).lp).objective;
    const double minimal = hierarchy_value(gm, tables, {HierarchyLevel::Kind::Minimal, 0});
    const double pairs = hierarchy_value(gm, tables, {HierarchyLevel::Kind::SizeT, 2});
    const double full = hierarchy_value(gm, tables, {HierarchyLevel::Kind::Full, 0});
    CHECK(minimal == doctest::Approx(plain).epsilon(1e-9));
    CHECK(plain <= minimal + 1e-7);
    CHECK(minimal <= pairs + 1e-7);
    CHECK(pairs <= full + 1e-7);

    const OracleResult o = grid_enumerate(gm, p, OracleMode::Discretized);
    REQUIRE(o.found);
    CHECK(std::abs(full - o.value) <= 1e-7);
}

TEST_CASE("literal and reduced hierarchy forms agree")
{
    std::mt19937_64 rng(11);
    const FactorGraph gm = build_gm(testing::path3_with_aggregator(rng));
    const Partition p = partition_uniform(gm, 2);
    const Tables tables = build_tables(gm, p);
    REQUIRE_FALSE(tables.infeasible);
    for (const HierarchyLevel level : {HierarchyLevel{HierarchyLevel::Kind::SizeT, 2},
                                       HierarchyLevel{HierarchyLevel::Kind::SizeT, 3}}) {
        const double literal = hierarchy_value(gm, tables, level, HierarchyForm::Literal);
        const double reduced = hierarchy_value(gm, tables, level, HierarchyForm::Reduced);
        CHECK(std::abs(literal - reduced) <= 1e-7);
    }
}

TEST_CASE("plain LP is a lower bound of the discretized optimum")
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        testing::RandomNetOptions opt;
        opt.nodes = 3;
        opt.cycle = trial % 2 == 1;
        const FactorGraph gm = build_gm(testing::random_network(rng, opt));
        const Partition p = partition_uniform(gm, 3);
        const double lp = plain_value(gm, p);
        const OracleResult o = grid_enumerate(gm, p, OracleMode::Discretized);
        REQUIRE(o.found);
        CHECK(lp <= o.value + 1e-7);
    }
}

TEST_CASE("MPS writer output")
{
    LinearProgram lp = normalization_lp(0.0, 0.5);
    const auto r = lp.add_row("m_E_0_1", 0.0);
    lp.add_entry(r, 0, 1.0);
    lp.add_entry(r, 1, -2.5);
    const std::string expected =
        "NAME          PCNF\n"
        "ROWS\n"
        " N  obj\n"
        " E  m_E_0_1\n"
        " E  n_i_x\n"
        "COLUMNS\n"
        "    b_i_x_0   m_E_0_1   1\n"
        "    b_i_x_0   n_i_x     1\n"
        "    b_i_x_1   obj       0.5\n"
        "    b_i_x_1   m_E_0_1   -2.5\n"
        "    b_i_x_1   n_i_x     1\n"
        "RHS\n"
        "    RHS       n_i_x     1\n"
        "ENDATA\n";
    CHECK(to_mps(lp) == expected);
    CHECK(to_mps(lp) == to_mps(lp));

    const std::string lp_text = to_lp_text(lp);
    CHECK(lp_text.find("Minimize") != std::string::npos);
    CHECK(lp_text.find("n_i_x: 1 b_i_x_0 + 1 b_i_x_1 = 1") != std::string::npos);
}

TEST_CASE("LP files round-trip")
{
    const FactorGraph gm = build_gm(testing::analytic_two_node());
    const Partition p = partition_uniform(gm, 3);
    const Tables tables = build_tables(gm, p);
    const LinearProgram lp = build_int_part_lp(gm, tables).lp;
    const double value = solve_lp(lp).objective;
    for (const LinearProgram& back : {parse_mps(to_mps(lp)), parse_lp_text(to_lp_text(lp))}) {
        CHECK(back.num_rows() == lp.num_rows());
        CHECK(back.num_cols() == lp.num_cols());
        CHECK(back.num_nonzeros() == lp.num_nonzeros());
        CHECK(std::abs(solve_lp(back).objective - value) <= 1e-12);
    }
    CHECK(to_mps(parse_mps(to_mps(lp))) == to_mps(lp));
    CHECK(to_lp_text(parse_lp_text(to_lp_text(lp))) == to_lp_text(lp));
}

TEST_CASE("LP writers reject bad names")
{
    LinearProgram dup = normalization_lp(0.0, 1.0);
    dup.col_names[1] = dup.col_names[0];
    CHECK_THROWS_AS((void)to_mps(dup), InputError);
    CHECK_THROWS_AS((void)to_lp_text(dup), InputError);

    LinearProgram spaced = normalization_lp(0.0, 1.0);
    spaced.row_names[0] = "has space";
    CHECK_THROWS_AS((void)to_mps(spaced), InputError);

    LinearProgram reserved = normalization_lp(0.0, 1.0);
    reserved.row_names[0] = "obj";
    CHECK_THROWS_AS((void)to_mps(reserved), InputError);
}

TEST_CASE("MPS parser reports the offending line")
{
    const std::string bad = "NAME          PCNF\nROWS\n N  obj\n L  r\nCOLUMNS\nENDATA\n";
    try {
        (void)parse_mps(bad);
        FAIL("expected a parse error");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    }
    CHECK(parse_lp_format("mps") == LpFormat::Mps);
    CHECK(parse_lp_format("lp") == LpFormat::LpText);
    CHECK_THROWS_AS((void)parse_lp_format("xml"), InputError);
}
