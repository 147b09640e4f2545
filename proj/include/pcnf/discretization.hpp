#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pcnf/factor_graph.hpp"
#include "pcnf/interval.hpp"

namespace pcnf {

// Per-scalar sorted breakpoints. Cell a of scalar v is
// [breaks[v][a], breaks[v][a + 1]]; a singleton domain has breaks {x, x}.
struct Partition {
    std::vector<std::vector<double>> breaks;

    [[nodiscard]] std::size_t num_vars() const { return breaks.size(); }
    [[nodiscard]] std::size_t cells(std::size_t v) const { return breaks[v].size() - 1; }
    [[nodiscard]] Interval cell(std::size_t v, std::size_t a) const { return {breaks[v][a], breaks[v][a + 1]}; }
    [[nodiscard]] Interval domain(std::size_t v) const { return {breaks[v].front(), breaks[v].back()}; }
    // Lowest cell index containing x (x is clamped to the domain).
    [[nodiscard]] std::size_t locate(std::size_t v, double x) const;
};

// Breakpoints of t equal-width cells over a finite domain; one cell for a singleton.
[[nodiscard]] std::vector<double> partition_uniform(Interval domain, std::size_t t);
[[nodiscard]] Partition partition_uniform(const FactorGraph& gm, std::size_t t);

// Bisect one cell. Throws InputError for a zero-width cell.
[[nodiscard]] Partition refine(const Partition& p, std::size_t var, std::size_t cell);

// Empty when the partition covers the domains with ordered, nonempty cells.
[[nodiscard]] std::string check_partition(const Partition& p, const std::vector<Interval>& domains);

// Mixed-radix block labels: the label of a block is the tuple of its scalars'
// cell indices, first scalar most significant.
class LabelSpace {
public:
    LabelSpace() = default;
    LabelSpace(const FactorGraph& gm, const Partition& p);

    [[nodiscard]] std::size_t labels(std::size_t block) const { return count_[block]; }
    [[nodiscard]] const Partition& partition() const { return *part_; }
    [[nodiscard]] std::size_t cell_of(std::size_t block, std::uint32_t label, std::size_t within) const;
    [[nodiscard]] std::uint32_t encode(std::size_t block, std::span<const std::size_t> cells) const;
    // Box of the block label, one interval per block scalar.
    [[nodiscard]] std::vector<Interval> box(std::size_t block, std::uint32_t label) const;

private:
    std::shared_ptr<const Partition> part_;       // private copy
    std::vector<std::vector<std::size_t>> scalars_;  // per block
    std::vector<std::size_t> count_;
    std::vector<std::vector<std::size_t>> stride_;
};

// Piecewise-constant lower-bound table of a factor together with the label
// tuples its constraint cannot refute. Tuples are stored flattened, `arity`
// labels each, in the order of the factor's blocks; enumeration order is
// lexicographic so tuple indices are deterministic.
struct FactorTable {
    std::size_t factor = 0;
    std::size_t arity = 0;
    std::vector<std::uint32_t> labels;
    std::vector<double> cost;
    std::vector<Verdict> verdict;

    [[nodiscard]] std::size_t size() const { return cost.size(); }
    [[nodiscard]] std::span<const std::uint32_t> tuple(std::size_t i) const
    {
        return {labels.data() + i * arity, arity};
    }
};

struct TableOptions {
    bool prune = true;                      // support propagation across factors
    std::size_t max_tests = 200'000'000;   // interval tests per build before CapacityError
};

struct Tables {
    LabelSpace space;
    std::vector<FactorTable> factors;
    // Live labels per block. A label dies when some incident factor has no
    // admissible tuple using it; its belief is zero in every feasible LP point.
    std::vector<std::vector<char>> alive;
    bool infeasible = false;
    std::string infeasible_factor;
    std::size_t tests = 0;

    [[nodiscard]] std::size_t live_labels(std::size_t block) const;
};

// Table of one factor over the full label space (no cross-factor pruning).
[[nodiscard]] FactorTable lower_bound_table(const FactorGraph& gm, const Partition& p, std::size_t factor);
[[nodiscard]] FactorTable feasible_tuples(const FactorGraph& gm, const Partition& p, std::size_t factor);

// Tables for every factor. Sets `infeasible` (and leaves tables partially
// pruned) when some factor has no admissible tuple.
[[nodiscard]] Tables build_tables(const FactorGraph& gm, const Partition& p, const TableOptions& opt = {});

}  // namespace pcnf
