#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcnf/cost.hpp"
#include "pcnf/interval.hpp"
#include "pcnf/network.hpp"

namespace pcnf {

inline constexpr std::size_t npos = static_cast<std::size_t>(-1);

// Scalar unknowns of the optimization problem.
enum class ScalarRole { Injection, Potential, Flow, Ratio };

struct ScalarVar {
    ScalarRole role = ScalarRole::Injection;
    std::size_t node = npos;  // owning node; the sending node for end-block scalars
    std::size_t peer = npos;  // receiving node for end-block scalars
    std::size_t component = 0;
    std::size_t block = npos;
    Interval domain;
    std::string name;
};

// Variable nodes of the graphical model. A block groups scalars that always
// appear together in factor scopes: the K injection components of a node, or
// the potential copy and outgoing flow of one directed edge end (pi_ij, phi_ij).
// Grouping keeps the node-law / edge-law pair from forming a 4-cycle through
// the shared pi_ij and phi_ij, so tree networks give tree-shaped graphs.
enum class BlockKind { Injection, EdgeEnd, Ratio };

struct VariableBlock {
    BlockKind kind = BlockKind::Injection;
    std::size_t node = npos;
    std::size_t peer = npos;
    std::size_t link = npos;
    std::vector<std::size_t> scalars;  // EdgeEnd: K potentials, then K flows
    std::string name;
};

// Undirected connection between two network nodes: a physical edge or the
// internal link of a transformer / compressor.
enum class LinkKind { Edge, Transform };

struct Link {
    LinkKind kind = LinkKind::Edge;
    std::size_t index = npos;  // into Network::edges, or the node carrying the transform
    std::size_t a = npos;      // edge.from, or transform in-node
    std::size_t b = npos;      // edge.to, or transform out-node
    std::size_t end_ab = npos;
    std::size_t end_ba = npos;
    std::size_t ratio = npos;  // ratio block for decision compression
};

enum class FactorKind { Cost, NodeLaw, EdgeLaw, Transform, Aggregator };

enum class Verdict : unsigned char {
    Infeasible,  // the box provably misses the constraint set
    Possible,    // cannot refute
    Certain,     // the box provably contains a feasible point
};

struct CostTerm {
    enum class Kind {
        Unary,          // fn(x[pos0])
        ActivePower,    // fn(Vr Ir + Vi Ii), pos = {Vr, Vi, Ir, Ii}
        ReactivePower,  // fn(Vi Ir - Vr Ii)
        LineLoss,       // weight ((e - c)^2 + (f - d)^2), pos = {e, f, c, d}
        AbsResidual,    // weight |x[pos0] - sum of the rest|
    };
    Kind kind = Kind::Unary;
    CostFunction fn;
    std::vector<std::size_t> pos;  // positions within the factor scope
    double weight = 1.0;
};

struct FactorNode {
    FactorKind kind = FactorKind::Cost;
    std::string name;
    std::vector<std::size_t> blocks;  // neighbor blocks, in scope order
    std::size_t node = npos;
    std::size_t link = npos;
    std::size_t aggregator = npos;
    bool conservation = true;  // node law enforces q_i = sum_j phi_ij
    std::vector<CostTerm> costs;
};

struct FactorGraph {
    Network net;  // with objective-specific domain overrides applied
    ObjectiveMode objective = ObjectiveMode::MinCost;
    std::size_t components = 1;
    std::vector<ScalarVar> scalars;
    std::vector<VariableBlock> blocks;
    std::vector<Link> links;
    std::vector<FactorNode> factors;
    std::vector<std::vector<std::size_t>> block_factors;  // incident factors per block, ascending
    std::vector<std::size_t> injection_block;              // per network node, npos for the slack

    [[nodiscard]] std::size_t num_scalars() const { return scalars.size(); }
    [[nodiscard]] std::size_t num_blocks() const { return blocks.size(); }
    [[nodiscard]] std::size_t num_factors() const { return factors.size(); }

    [[nodiscard]] bool is_constraint(std::size_t f) const { return factors[f].kind != FactorKind::Cost; }
    [[nodiscard]] bool has_cost(std::size_t f) const { return !factors[f].costs.empty(); }

    // Scalar indices of the factor scope: concatenation of its blocks' scalars.
    [[nodiscard]] std::vector<std::size_t> scope(std::size_t f) const;

    // Interval feasibility test over a box aligned with scope(f). Monotone:
    // shrinking the box never turns Infeasible into anything else.
    [[nodiscard]] Verdict test(std::size_t f, std::span<const Interval> box) const;

    // Certified lower bound of the factor's cost over the box (0 without costs).
    [[nodiscard]] double cost_lower_bound(std::size_t f, std::span<const Interval> box) const;
    [[nodiscard]] double cost_at(std::size_t f, std::span<const double> x) const;

    // Largest constraint residual at a point aligned with scope(f); 0 for cost factors.
    [[nodiscard]] double violation(std::size_t f, std::span<const double> x) const;

    [[nodiscard]] std::vector<Interval> domains() const;
};

// Build the graphical model. The objective defaults to net.objective.
// Throws InputError when validate_network fails or the objective does not
// fit the physics.
[[nodiscard]] FactorGraph build_gm(const Network& net, std::optional<ObjectiveMode> objective = std::nullopt);

// p_lower <= |sum_{i in members} q_i^(k)| <= p_upper as a new constraint node.
[[nodiscard]] FactorGraph add_aggregator(const FactorGraph& gm, const std::vector<std::string>& members,
                                         double lower, double upper, std::size_t component);

// Acyclicity of the bipartite block/factor graph (every connected component a tree).
[[nodiscard]] bool is_tree(const FactorGraph& gm);

// Copy of the graph with replaced scalar domains (after bound tightening).
[[nodiscard]] FactorGraph with_domains(const FactorGraph& gm, const std::vector<Interval>& domains);

// Line-oriented text listing of variables and factors, sorted by name.
[[nodiscard]] std::string dump_gm(const FactorGraph& gm);

// Full scalar assignment from network-level values; used for round-trip checks.
// potentials[node][k], injections[node][k], flows[link] = {forward K, reverse K}.
[[nodiscard]] std::vector<double> assemble_point(const FactorGraph& gm,
                                                 const std::vector<std::vector<double>>& potentials,
                                                 const std::vector<std::vector<double>>& injections,
                                                 const std::vector<std::vector<double>>& flows,
                                                 const std::vector<double>& ratios = {});

}  // namespace pcnf
