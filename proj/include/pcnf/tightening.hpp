#pragma once

#include <cstddef>
#include <vector>

#include "pcnf/factor_graph.hpp"
#include "pcnf/interval.hpp"

namespace pcnf {

// Per-scalar bounds carried through the tightening sweeps.
struct BoundsState {
    std::vector<Interval> bounds;
    std::vector<Interval> original;
    std::size_t sweeps = 0;
    std::vector<double> change;  // largest endpoint move, per sweep
    bool converged = false;

    [[nodiscard]] static BoundsState from(const FactorGraph& gm);
};

enum class SweepSchedule {
    Jacobi,       // every variable against the previous sweep's bounds
    GaussSeidel,  // updates are visible immediately
};

struct TighteningOptions {
    std::size_t resolution = 16;  // cells per local variable
    std::size_t max_sweeps = 50;
    double tol = 1e-6;
    SweepSchedule schedule = SweepSchedule::Jacobi;
    // Interval projections of each constraint onto the variable, intersected
    // with the hull of surviving cells.
    bool projections = true;
    // Interval tests spent on one (variable cell, constraint) query; past it
    // the cell is kept, which is always sound.
    std::size_t query_budget = 20'000;
    // Worker threads for Jacobi sweeps; 0 picks the hardware concurrency.
    // Results do not depend on it.
    std::size_t threads = 0;
};

// New interval for scalar `var`: the hull of its cells that pass every
// incident constraint for some cell choice of the constraint's other
// variables, intersected with the current interval. Empty when no cell
// survives. Requires resolution >= 2.
[[nodiscard]] Interval tighten_once(const FactorGraph& gm, const std::vector<Interval>& bounds, std::size_t var,
                                    const TighteningOptions& opt = {});

// Sweeps over all scalars in name order until the largest endpoint change
// drops below tol or max_sweeps is reached. Throws
// InfeasibleError(Local) when a domain becomes empty.
[[nodiscard]] BoundsState tighten_all(const FactorGraph& gm, BoundsState state, const TighteningOptions& opt = {});

// Brute-force hull of the jointly feasible cells of all scalars, for graphs
// with at most four blocks. Reference for the local sweeps; empty intervals
// mean no joint cell assignment passes.
[[nodiscard]] std::vector<Interval> tighten_global_bruteforce(const FactorGraph& gm, const std::vector<Interval>& bounds,
                                                              std::size_t resolution);

}  // namespace pcnf
