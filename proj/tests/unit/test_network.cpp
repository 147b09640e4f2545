#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "pcnf/errors.hpp"
#include "pcnf/network.hpp"
#include "pcnf/network_json.hpp"
#include "support/instances.hpp"

using namespace pcnf;

namespace {

EdgeSpec gas_edge(double gamma = 1.0, double b = 0.0)
{
    EdgeSpec e;
    e.from = "0";
    e.to = "1";
    e.physics = GasWeymouth{gamma, b};
    e.flow_domain = {Interval{-10.0, 10.0}};
    return e;
}

EdgeSpec ac_edge(double r, double x)
{
    EdgeSpec e;
    e.from = "0";
    e.to = "1";
    e.physics = AcPowerVoltage{r, x};
    e.flow_domain = {Interval{-10.0, 10.0}, Interval{-10.0, 10.0}};
    return e;
}

std::vector<double> v1(double a) { return {a}; }

}  // namespace

TEST_CASE("validate_network")
{
    Network net = testing::analytic_two_node();
    CHECK(validate_network(net).ok());

    Network bad = net;
    std::get<GasWeymouth>(bad.edges[0].physics).gamma = 0.0;
    CHECK(validate_network(bad).has("gas conductance must be positive"));

    bad = net;
    bad.slack_ids = {"0", "1"};
    CHECK(validate_network(bad).has("exactly one slack"));

    bad = net;
    bad.edges[0].to = "7";
    CHECK(validate_network(bad).has("does not exist"));

    bad = net;
    bad.nodes[1].injection = {Interval{2.0, 1.0}};
    CHECK(validate_network(bad).has("nonempty"));

    bad = net;
    bad.nodes[0].potential = {Interval{20.0, 25.0}};
    CHECK(validate_network(bad).has("slack potential must be a singleton"));

    bad = net;
    bad.edges.push_back(bad.edges[0]);
    std::swap(bad.edges[1].from, bad.edges[1].to);
    CHECK(validate_network(bad).has("duplicate undirected edge"));

    bad = net;
    bad.edges[0].to = "0";
    CHECK(validate_network(bad).has("self-loops"));

    bad = net;
    bad.edges[0].physics = AcPowerVoltage{0.0, 0.0};
    CHECK(validate_network(bad).has("impedance must be nonzero"));

    bad = net;
    bad.edges[0].physics = Dissipative{MonotoneLaw::table({0.0, 1.0}, {1.0, 0.0})};
    CHECK(validate_network(bad).has("monotone nondecreasing"));
}

TEST_CASE("gas edge flow")
{
    const EdgeSpec e = gas_edge();
    CHECK(edge_flow(e, v1(4.0), v1(0.0), Direction::Forward)[0] == 2.0);
    CHECK(edge_flow(e, v1(3.0), v1(3.0), Direction::Forward)[0] == 0.0);
    // Swapped endpoints: the reverse direction sends from node 1.
    CHECK(edge_flow(e, v1(0.0), v1(4.0), Direction::Reverse)[0] == -2.0);
    CHECK(edge_flow(e, v1(0.0), v1(4.0), Direction::Forward)[0] == -2.0);
    CHECK_THROWS_WITH_AS((void)edge_flow(e, v1(NAN), v1(0.0), Direction::Forward), "non-finite potential", InputError);
}

TEST_CASE("AC power-voltage flow")
{
    const EdgeSpec e = ac_edge(1.0, 0.0);
    const auto phi = edge_flow(e, std::vector<double>{2.0, 0.0}, std::vector<double>{1.0, 0.0}, Direction::Forward);
    CHECK(phi[0] == 2.0);
    CHECK(phi[1] == 0.0);
}

TEST_CASE("edge flow enclosures")
{
    const EdgeSpec e = gas_edge();
    const std::vector<Interval> a{Interval{0.0, 4.0}}, b{Interval{0.0, 4.0}};
    CHECK(edge_flow_enclosure(e, a, b, Direction::Forward)[0] == Interval{-2.0, 2.0});
    const std::vector<Interval> p{Interval{4.0}}, z{Interval{0.0}};
    CHECK(edge_flow_enclosure(e, p, z, Direction::Forward)[0] == Interval{2.0});

    const EdgeSpec ac = ac_edge(1.0, 0.0);
    const std::vector<Interval> vi{Interval{1.0, 2.0}, Interval{0.0}}, vj{Interval{1.0}, Interval{0.0}};
    const Box enc = edge_flow_enclosure(ac, vi, vj, Direction::Forward);
    CHECK(enc[0].contains(Interval{0.0, 2.0}));
    for (int s = 0; s <= 1000; ++s) {
        const double x = 1.0 + s / 1000.0;
        const auto phi = edge_flow(ac, std::vector<double>{x, 0.0}, std::vector<double>{1.0, 0.0}, Direction::Forward);
        CHECK(enc[0].contains(phi[0]));
        CHECK(enc[1].contains(phi[1]));
    }
}

TEST_CASE("transforms")
{
    TransformSpec gas;
    gas.kind = TransformSpec::Kind::Multiplicative;
    gas.coefficient = {1.2};
    CHECK(apply_transform(gas, v1(25.0))[0] == doctest::Approx(30.0));
    gas.coefficient = {1.0};
    CHECK(apply_transform(gas, v1(17.5))[0] == 17.5);
    gas.coefficient = {0.0};
    CHECK_THROWS_AS((void)apply_transform(gas, v1(25.0)), InputError);

    TransformSpec shifter;
    const double theta = 0.3;
    shifter.coefficient = {std::cos(theta), std::sin(theta)};
    const std::vector<double> vin{1.02, -0.07};
    const auto vout = apply_transform(shifter, vin);
    CHECK(std::hypot(vout[0], vout[1]) == doctest::Approx(std::hypot(vin[0], vin[1])).epsilon(1e-14));

    TransformSpec add;
    add.kind = TransformSpec::Kind::Additive;
    add.coefficient = {2.5};
    CHECK(apply_transform(add, v1(1.0))[0] == 3.5);

    TransformSpec tab;
    tab.kind = TransformSpec::Kind::Tabulated;
    tab.table_x = {0.0, 10.0};
    tab.table_y = {1.0, 21.0};
    CHECK(apply_transform(tab, v1(5.0))[0] == 11.0);
}

TEST_CASE("gas antisymmetry and monotonicity")
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(-50.0, 50.0);
    const EdgeSpec e = gas_edge(1.7, 0.0);
    for (int s = 0; s < 1000; ++s) {
        const double a = U(rng), b = U(rng), d = std::abs(U(rng)) + 1e-3;
        const double fwd = edge_flow(e, v1(a), v1(b), Direction::Forward)[0];
        CHECK(fwd == -edge_flow(e, v1(b), v1(a), Direction::Reverse)[0]);
        CHECK(fwd == -edge_flow(e, v1(b), v1(a), Direction::Forward)[0]);
        if (a != b) {
            CHECK(edge_flow(e, v1(a + d), v1(b), Direction::Forward)[0] > fwd);
            CHECK(edge_flow(e, v1(a), v1(b + d), Direction::Forward)[0] < fwd);
        }
    }
}

TEST_CASE("dissipative flow is monotone in the potential difference")
{
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> U(-10.0, 10.0);
    EdgeSpec power = gas_edge();
    power.physics = Dissipative{MonotoneLaw::power(0.8, 1.3)};
    EdgeSpec table = gas_edge();
    table.physics = Dissipative{MonotoneLaw::table({-2.0, 0.0, 3.0}, {-5.0, 0.0, 1.0})};
    for (const EdgeSpec* e : {&power, &table}) {
        for (int s = 0; s < 500; ++s) {
            const double a = U(rng), b = U(rng), c = U(rng);
            const double f_lo = edge_flow(*e, v1(std::min(a, b)), v1(c), Direction::Forward)[0];
            const double f_hi = edge_flow(*e, v1(std::max(a, b)), v1(c), Direction::Forward)[0];
            CHECK(f_lo <= f_hi);
        }
    }
}

TEST_CASE("AC lossless reciprocity with pure reactance")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-1.5, 1.5);
    const EdgeSpec e = ac_edge(0.0, 0.37);
    for (int s = 0; s < 1000; ++s) {
        const std::vector<double> vi{U(rng), U(rng)}, vj{U(rng), U(rng)};
        const double p_ij = edge_flow(e, vi, vj, Direction::Forward)[0];
        const double p_ji = edge_flow(e, vj, vi, Direction::Reverse)[0];
        CHECK(p_ij == doctest::Approx(-p_ji).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("enclosure soundness over random boxes")
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(-3.0, 3.0), W(0.0, 1.5), T(0.0, 1.0);
    std::vector<EdgeSpec> edges{gas_edge(1.3, 0.4), ac_edge(0.2, 0.5)};
    edges.push_back(gas_edge());
    edges.back().physics = Dissipative{MonotoneLaw::power(1.5, 0.7)};
    edges.push_back(ac_edge(0.1, 0.3));
    edges.back().physics = AcCurrentVoltage{0.1, 0.3};
    edges.push_back(gas_edge());
    edges.back().physics = CustomTable{{-4.0, 0.0, 4.0}, {-4.0, 4.0}, {0.0, -2.0, 1.0, 0.5, 3.0, -1.0}};

    int violations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const EdgeSpec& e = edges[trial % edges.size()];
        const std::size_t K = physics_components(e.physics);
        std::vector<Interval> bf(K), bt(K);
        for (std::size_t k = 0; k < K; ++k) {
            const double a = U(rng), b = U(rng);
            bf[k] = {a, a + W(rng)};
            bt[k] = {b, b + W(rng)};
        }
        for (Direction dir : {Direction::Forward, Direction::Reverse}) {
            const Box enc = edge_flow_enclosure(e, bf, bt, dir);
            for (int s = 0; s < 20; ++s) {
                std::vector<double> pf(K), pt(K);
                for (std::size_t k = 0; k < K; ++k) {
                    pf[k] = bf[k].lo + T(rng) * bf[k].width();
                    pt[k] = bt[k].lo + T(rng) * bt[k].width();
                }
                const auto phi = edge_flow(e, pf, pt, dir);
                for (std::size_t k = 0; k < K; ++k)
                    if (!enc[k].inflated(feasibility_slack(enc[k])).contains(phi[k])) ++violations;
            }
        }
    }
    CHECK(violations == 0);
}

TEST_CASE("network JSON round trip")
{
    const char* text = R"({
      "components": 1,
      "slack": "s",
      "nodes": [
        {"id": "s", "potential": 25, "injection": [-10, 10]},
        {"id": "d", "potential": [21, 25], "injection": [[-3, -1]],
         "cost": {"kind": "quadratic", "coefficients": [9, 6, 1]}}
      ],
      "edges": [
        {"from": "s", "to": "d", "physics": {"kind": "gas", "gamma": 1, "b": 0}, "flow_domain": [-3, 3]}
      ]
    })";
    const Network net = parse_network_text(text);
    CHECK(validate_network(net).ok());
    CHECK(net.nodes[1].injection[0] == Interval{-3.0, -1.0});
    CHECK(net.nodes[1].cost[0](-2.0) == 1.0);
    const Network again = parse_network(network_to_json(net));
    CHECK(network_to_json(again) == network_to_json(net));

    CHECK_THROWS_WITH_AS((void)parse_network_text("{\"nodes\": [}"), doctest::Contains("malformed JSON"), InputError);
    CHECK_THROWS_WITH_AS((void)parse_network_text(R"({"nodes": [], "bogus": 1})"), doctest::Contains("unknown key"),
                         InputError);
}
