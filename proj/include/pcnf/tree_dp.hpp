#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pcnf/discretization.hpp"
#include "pcnf/factor_graph.hpp"

namespace pcnf {

// Node ids of the bipartite graph: blocks are 0..B-1, factor f is B + f.
struct RootedTree {
    std::vector<std::size_t> roots;      // one block per connected component
    std::vector<std::size_t> parent;     // npos for roots
    std::vector<std::vector<std::size_t>> children;  // ascending ids
    std::vector<std::size_t> order;      // parents before children
    std::size_t num_blocks = 0;

    [[nodiscard]] bool is_factor(std::size_t node) const { return node >= num_blocks; }
};

// Throws InputError("not a tree") for loopy graphs. `root` is a block index;
// further components are rooted at their lowest block.
[[nodiscard]] RootedTree root_tree(const FactorGraph& gm, std::size_t root = 0);

struct Messages {
    // kappa[b][a]: min cost of the subtree below block b with b at label a.
    std::vector<std::vector<double>> kappa;
    // gamma[f][a]: min cost of the subtree below factor f, given its parent at label a.
    std::vector<std::vector<double>> gamma;
    // argmin[f][a]: table tuple attaining gamma[f][a] (npos if none).
    std::vector<std::vector<std::size_t>> argmin;
};

[[nodiscard]] Messages forward_pass(const FactorGraph& gm, const RootedTree& tree, const Tables& tables);

struct TreeAssignment {
    std::vector<std::uint32_t> labels;    // per block
    std::vector<std::size_t> tuples;      // chosen table tuple per factor
    double value = INFINITY;              // sum of root minima
};

// Throws InfeasibleError(Discretization) when a root minimum is infinite.
[[nodiscard]] TreeAssignment backward_pass(const FactorGraph& gm, const RootedTree& tree, const Tables& tables,
                                           const Messages& msg);

struct TreeSolution {
    double value = INFINITY;
    TreeAssignment assignment;
    std::vector<double> representative;  // cell midpoint per scalar
};

[[nodiscard]] TreeSolution solve_tree(const FactorGraph& gm, const Partition& p, const Tables& tables,
                                      std::size_t root = 0);

// Cell midpoints of a block labelling, one value per scalar.
[[nodiscard]] std::vector<double> representative_point(const FactorGraph& gm, const Partition& p,
                                                       const LabelSpace& ls, const std::vector<std::uint32_t>& labels);

}  // namespace pcnf
