#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pcnf/discretization.hpp"
#include "pcnf/factor_graph.hpp"
#include "pcnf/lp.hpp"

namespace pcnf {

// What an LP column is a belief of.
struct BeliefColumn {
    enum class Kind { Block, Factor, SuperNode };
    Kind kind = Kind::Block;
    std::size_t owner = 0;  // block, factor or super-node index
    std::size_t index = 0;  // block label, table tuple, or joint assignment
};

struct BeliefLP {
    LinearProgram lp;
    std::vector<BeliefColumn> columns;  // parallel to lp columns
    // Block beliefs present in the LP (live labels only); empty when the
    // form carries no per-block columns.
    std::vector<std::vector<std::uint32_t>> block_labels;
    std::vector<std::vector<std::size_t>> block_cols;
    // Super-node forms: member blocks (sorted), joint assignments flattened
    // (|blocks| labels each, in block order) and their columns.
    std::vector<std::vector<std::size_t>> supernode_blocks;
    std::vector<std::vector<std::uint32_t>> supernode_joints;
    std::vector<std::vector<std::size_t>> supernode_cols;
    bool infeasible = false;  // some constraint node has no feasible tuple
    std::string infeasible_factor;
};

// Local-consistency belief LP over the tables: one normalized belief per
// block and per factor, linked by marginalization for every incident pair.
[[nodiscard]] BeliefLP build_int_part_lp(const FactorGraph& gm, const Tables& tables);

// Downward-closed families of block sets.
struct SuperNodeSet {
    std::vector<std::vector<std::size_t>> members;  // sorted block sets, sorted by (size, lexicographic)
    std::vector<std::vector<std::size_t>> maximal;  // members contained in no other member
};

struct HierarchyLevel {
    enum class Kind { Minimal, SizeT, Full };
    Kind kind = Kind::Minimal;
    std::size_t t = 0;  // SizeT only
};

// "minimal", "size:K" (or "size_t=K") and "full".
[[nodiscard]] HierarchyLevel parse_hierarchy_level(const std::string& text);
[[nodiscard]] std::string hierarchy_level_name(const HierarchyLevel& level);

// Throws CapacityError when the family would exceed `cap` members.
[[nodiscard]] SuperNodeSet generate_supernodes(const FactorGraph& gm, const HierarchyLevel& level,
                                               std::size_t cap = 1u << 16);

enum class HierarchyForm {
    Literal,  // a belief table per member, marginalization for every immediate containment
    Reduced,  // maximal members only, consistent on pairwise intersections (same optimum)
};

// Joint beliefs over super-nodes. Joint assignments are restricted to those
// whose projection onto every contained factor scope is a table tuple; each
// factor's cost is charged to one super-node containing its scope.
[[nodiscard]] BeliefLP build_hierarchy_lp(const FactorGraph& gm, const Tables& tables, const SuperNodeSet& sn,
                                          HierarchyForm form = HierarchyForm::Reduced,
                                          std::size_t max_columns = 2'000'000);

struct FractionalBelief {
    std::size_t block = 0;
    std::uint32_t label = 0;
    double value = 0.0;
};

struct IntegralityReport {
    bool integral = true;
    std::vector<FractionalBelief> fractional;
};

// Beliefs per block over all labels (dead labels get 0). Super-node forms
// marginalize the first super-node containing the block.
[[nodiscard]] std::vector<std::vector<double>> block_beliefs(const Tables& tables, const BeliefLP& blp,
                                                             const std::vector<double>& x);

[[nodiscard]] IntegralityReport check_integrality(const std::vector<std::vector<double>>& beliefs,
                                                  double tol = 1e-6);

// Most believed label per block (lowest label on ties).
[[nodiscard]] std::vector<std::uint32_t> belief_assignment(const std::vector<std::vector<double>>& beliefs);

}  // namespace pcnf
