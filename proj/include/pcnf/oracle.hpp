#pragma once

#include <cstddef>
#include <vector>

#include "pcnf/discretization.hpp"
#include "pcnf/factor_graph.hpp"
#include "pcnf/lp.hpp"

namespace pcnf {

// Brute-force reference solvers. They share the network and factor-graph
// types with the main path but evaluate feasibility straight from the point
// physics, so they can check the table builder, the LP and the tree DP.

enum class OracleMode {
    // Exhaustive search over one cell per scalar, accepting assignments whose
    // cells pass every constraint test; minimizes the sum of cell cost minima.
    Discretized,
    // Injection cell midpoints, repaired to satisfy the network equations by
    // 1-D root bracketing, then polished by compass search. Upper estimate.
    ContinuousApprox,
};

[[nodiscard]] const char* oracle_mode_name(OracleMode m);

struct OracleOptions {
    std::size_t cap = 0;  // search nodes / enumerated points; 0 reads PCNF_ORACLE_CAP or uses 10^7
    bool polish = true;   // continuous mode only
};

// Cap from PCNF_ORACLE_CAP when set and valid, else 10^7.
[[nodiscard]] std::size_t oracle_cap();

struct OracleResult {
    bool found = false;
    double value = INFINITY;
    std::vector<double> point;            // one value per scalar
    std::vector<std::size_t> cells;       // discretized mode: chosen cell per scalar
    double residual = INFINITY;           // max constraint / domain violation at point
    bool feasible = false;                // residual <= tolerance
    double tolerance = 0.0;
    std::size_t enumerated = 0;
};

// Throws CapacityError("instance too large for oracle") when the cap is hit,
// InputError for physics the oracle does not model (AC, custom tables) and,
// in continuous mode, for networks with more than one independent cycle.
[[nodiscard]] OracleResult grid_enumerate(const FactorGraph& gm, const Partition& p, OracleMode mode,
                                          const OracleOptions& opt = {});

// Largest violation of the network equations and scalar domains at x.
[[nodiscard]] double point_residual(const FactorGraph& gm, const std::vector<double>& x);

struct VertexResult {
    LPStatus status = LPStatus::Infeasible;
    double objective = INFINITY;
    std::vector<double> x;
    std::size_t bases = 0;  // candidate column subsets tried
};

// Minimum over all basic feasible solutions. Assumes the LP is bounded.
// Throws CapacityError when the LP has more than max_cols columns.
[[nodiscard]] VertexResult lp_vertex_enumerate(const LinearProgram& lp, std::size_t max_cols = 8);

}  // namespace pcnf
