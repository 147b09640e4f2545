#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pcnf/cost.hpp"
#include "pcnf/interval.hpp"

namespace pcnf {

// One interval per flow component.
using Box = std::vector<Interval>;

// Inverse marginal energy (E')^{-1} of a dissipative edge: maps a potential
// difference to a flow. Either c * sign(d) * |d|^p or a monotone
// piecewise-linear table with linear extrapolation.
struct MonotoneLaw {
    enum class Kind { Power, Table };

    Kind kind = Kind::Power;
    double coefficient = 1.0;
    double exponent = 1.0;
    std::vector<double> xs;
    std::vector<double> ys;

    static MonotoneLaw power(double coefficient, double exponent);
    static MonotoneLaw table(std::vector<double> xs, std::vector<double> ys);

    [[nodiscard]] double operator()(double d) const;
    [[nodiscard]] Interval image(Interval d) const;
    [[nodiscard]] std::string validate() const;
};

struct GasWeymouth {
    double gamma = 1.0;   // conductance constant
    double offset = 0.0;  // additive compression b_ij
};

struct AcPowerVoltage {
    double resistance = 0.0;
    double reactance = 0.0;
};

struct AcCurrentVoltage {
    double resistance = 0.0;
    double reactance = 0.0;
};

struct Dissipative {
    MonotoneLaw law;
};

// Sampled forward flow f(pi_from, pi_to) on a rectangular grid, bilinearly
// interpolated and clamped to the grid. The reverse flow is -f(pi_to, pi_from).
// Enclosures take the hull of the grid values over every grid cell touching
// the query box, which bounds the interpolant exactly.
struct CustomTable {
    std::vector<double> from_grid;
    std::vector<double> to_grid;
    std::vector<double> values;  // row-major, values[i * to_grid.size() + j]

    [[nodiscard]] double at(double a, double b) const;
    [[nodiscard]] Interval enclose(Interval a, Interval b) const;
    [[nodiscard]] std::string validate() const;
};

using Physics = std::variant<GasWeymouth, AcPowerVoltage, AcCurrentVoltage, Dissipative, CustomTable>;

enum class PhysicsKind { GasWeymouth, AcPowerVoltage, AcCurrentVoltage, Dissipative, CustomTable };

[[nodiscard]] PhysicsKind physics_kind(const Physics& p);
[[nodiscard]] const char* physics_name(PhysicsKind k);
// Number of flow components the physics acts on (2 for the AC forms).
[[nodiscard]] std::size_t physics_components(const Physics& p);
// Flow is a monotone function of a scalar potential difference.
[[nodiscard]] bool physics_is_monotone(const Physics& p);

enum class Direction {
    Forward,  // flow leaving edge.from towards edge.to
    Reverse,  // flow leaving edge.to towards edge.from
};

struct EdgeSpec {
    std::string from;
    std::string to;
    Physics physics;
    Box flow_domain;          // for the forward direction
    Box reverse_flow_domain;  // empty means the mirror image of flow_domain

    [[nodiscard]] Box reverse_domain() const;
};

// Two-port device on a node: the node carries the in port, `out` names the
// node on the out port. The pair is joined by a transform link that enforces
// pi_out = T(pi_in) and lossless flow pass-through.
struct TransformSpec {
    enum class Kind { Multiplicative, Additive, Tabulated };

    Kind kind = Kind::Multiplicative;
    // Multiplicative: {alpha} for one component, {Re alpha, Im alpha} for AC.
    // Additive: one offset per component.
    std::vector<double> coefficient;
    std::vector<double> table_x;  // tabulated, single component
    std::vector<double> table_y;
    std::string out;
    Box flow_domain;
    // When set, the multiplicative ratio is a decision variable in this range
    // with cost ratio_cost (compressor control).
    std::optional<Interval> ratio_domain;
    CostFunction ratio_cost;
};

struct NodeSpec {
    std::string id;
    Box injection;                  // Theta_i
    Box potential;                  // Pi_i; volts (rectangular parts) or squared pressure
    std::vector<CostFunction> cost;  // one per component
    std::optional<TransformSpec> transform;
};

// p_lower <= |sum of member injections (component k)| <= p_upper
struct AggregatorSpec {
    std::vector<std::string> members;
    double lower = 0.0;
    double upper = INFINITY;
    std::size_t component = 0;
};

struct Measurement {
    enum class Kind { Potential, Injection, Flow };
    Kind kind = Kind::Potential;
    std::string node;  // sending node for flows
    std::string to;    // receiving node for flows
    std::vector<double> value;
};

enum class ObjectiveMode { MinCost, DistributionLoss, OptimalGas, StateEstimation };

[[nodiscard]] const char* objective_name(ObjectiveMode m);
[[nodiscard]] std::optional<ObjectiveMode> parse_objective(const std::string& s);

struct Network {
    std::vector<NodeSpec> nodes;
    std::vector<EdgeSpec> edges;
    std::vector<std::string> slack_ids;
    std::size_t components = 1;
    ObjectiveMode objective = ObjectiveMode::MinCost;
    std::vector<AggregatorSpec> aggregators;
    std::vector<Measurement> measurements;

    [[nodiscard]] std::optional<std::size_t> find_node(const std::string& id) const;
    // Throws InputError for unknown ids.
    [[nodiscard]] std::size_t node_index(const std::string& id) const;
    // Index of the unique slack node; throws when the network has none or several.
    [[nodiscard]] std::size_t slack() const;
};

struct Violation {
    std::string where;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;

    [[nodiscard]] bool ok() const { return violations.empty(); }
    [[nodiscard]] bool has(const std::string& fragment) const;
    [[nodiscard]] std::string to_string() const;
};

[[nodiscard]] ValidationReport validate_network(const Network& net);

// f_ij(pi_i, pi_j) where pi_from is the potential of the sending node of the
// requested direction. Throws InputError on non-finite potentials.
[[nodiscard]] std::vector<double> edge_flow(const EdgeSpec& edge, std::span<const double> pi_from,
                                            std::span<const double> pi_to, Direction dir);

// Sound enclosure of edge_flow over the product of the two boxes.
[[nodiscard]] Box edge_flow_enclosure(const EdgeSpec& edge, std::span<const Interval> box_from,
                                      std::span<const Interval> box_to, Direction dir);

// pi_out = T(pi_in). `ratio` overrides the multiplicative coefficient when the
// ratio is a decision variable.
[[nodiscard]] std::vector<double> apply_transform(const TransformSpec& spec, std::span<const double> pi_in,
                                                  std::optional<double> ratio = std::nullopt);

[[nodiscard]] Box transform_enclosure(const TransformSpec& spec, std::span<const Interval> box_in,
                                      std::optional<Interval> ratio = std::nullopt);

}  // namespace pcnf
