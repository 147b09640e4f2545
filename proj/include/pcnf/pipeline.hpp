#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "pcnf/belief_lp.hpp"
#include "pcnf/discretization.hpp"
#include "pcnf/factor_graph.hpp"
#include "pcnf/lp_io.hpp"
#include "pcnf/tightening.hpp"

namespace pcnf {

enum class SolverChoice { Auto, Lp, Tree };
enum class RefinePolicy {
    Widest,      // bisect the widest cell used by the incumbent
    Fractional,  // bisect every cell in the fractional LP support
};

[[nodiscard]] SolverChoice parse_solver(const std::string& name);
[[nodiscard]] const char* solver_name(SolverChoice s);
[[nodiscard]] RefinePolicy parse_refine_policy(const std::string& name);
[[nodiscard]] const char* refine_policy_name(RefinePolicy p);

struct RunConfig {
    std::size_t t = 8;
    std::size_t refine_rounds = 0;
    std::size_t tighten_sweeps = 0;  // 0 turns tightening off
    std::optional<HierarchyLevel> hierarchy;
    SolverChoice solver = SolverChoice::Auto;
    RefinePolicy refine = RefinePolicy::Widest;
    bool oracle = false;  // continuous oracle upper estimate every round
    std::uint64_t seed = 0;
    TighteningOptions tightening;  // max_sweeps is taken from tighten_sweeps
    double integrality_tol = 1e-6;

    // Throws InputError for t == 0 or conflicting options.
    void check() const;
};

struct RoundRecord {
    std::size_t round = 0;
    std::string solver;  // "tree", "lp" or "hierarchy"
    double lower_bound = 0.0;
    std::optional<double> upper;  // oracle estimate
    std::optional<double> gap;    // (upper - lower) / max(|upper|, 1)
    std::string oracle_status;    // empty when the oracle is off
    bool integral = true;
    std::size_t cells = 0;        // total cells over all scalars
    std::vector<std::pair<std::size_t, std::size_t>> refined;  // (scalar, cell) split after this round
};

struct StageTime {
    std::string stage;
    double seconds = 0.0;
};

struct SolveReport {
    FactorGraph gm;  // after tightening
    RunConfig config;
    std::vector<RoundRecord> history;
    std::vector<StageTime> timings;
    Partition partition;  // of the final round
    std::vector<std::uint32_t> labels;
    std::vector<double> representative;
    bool integral = true;
    std::vector<FractionalBelief> fractional;
    std::optional<BoundsState> tightened;
    bool bounds_monotone = true;  // lower bound non-decreasing over rounds
    bool bounds_ordered = true;   // lower <= upper + 1e-7 whenever the oracle ran

    [[nodiscard]] double lower_bound() const { return history.back().lower_bound; }
};

// Tighten (optionally), partition, solve and refine. Throws InputError,
// InfeasibleError (Discretization or Local) and CapacityError.
[[nodiscard]] SolveReport solve_network(const Network& net, const RunConfig& cfg);

// Graph after optional tightening; shared by solve and export.
[[nodiscard]] FactorGraph prepare_graph(const Network& net, const RunConfig& cfg,
                                        std::optional<BoundsState>* tightened = nullptr);

// Belief LP of the configured form (plain or hierarchy) at uniform t.
[[nodiscard]] BeliefLP build_export_lp(const FactorGraph& gm, const RunConfig& cfg);

// Report as JSON. Timings live under "timings" only, so the rest is
// reproducible from input and config.
[[nodiscard]] nlohmann::json report_to_json(const SolveReport& r);
[[nodiscard]] nlohmann::json instance_summary(const FactorGraph& gm);

}  // namespace pcnf
