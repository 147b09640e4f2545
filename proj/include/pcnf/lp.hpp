#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace pcnf {

// min c^T x  subject to  A x = b,  x >= 0.  Columns are stored sparse.
struct LinearProgram {
    using Entry = std::pair<std::uint32_t, double>;  // (row, coefficient)

    std::vector<std::string> row_names;
    std::vector<double> rhs;
    std::vector<std::string> col_names;
    std::vector<double> cost;
    std::vector<std::vector<Entry>> cols;

    [[nodiscard]] std::size_t num_rows() const { return rhs.size(); }
    [[nodiscard]] std::size_t num_cols() const { return cost.size(); }
    [[nodiscard]] std::size_t num_nonzeros() const;

    std::size_t add_row(std::string name, double b);
    std::size_t add_col(std::string name, double c);
    // Adds to an existing coefficient if the entry is already present.
    void add_entry(std::size_t row, std::size_t col, double v);

    // Largest |Ax - b| and largest negative part of x.
    [[nodiscard]] double residual(const std::vector<double>& x) const;
    [[nodiscard]] double objective(const std::vector<double>& x) const;
};

enum class LPStatus { Optimal, Infeasible, Unbounded };

[[nodiscard]] const char* lp_status_name(LPStatus s);

struct SimplexOptions {
    double feasibility_tol = 1e-9;
    double optimality_tol = 1e-9;
    double pivot_tol = 1e-9;
    std::size_t max_iterations = 0;   // 0: 50 (m + n) + 1000
    std::size_t refactor_every = 100;
    std::size_t stall_after = 1000;    // consecutive degenerate pivots before the lexicographic ratio test
};

struct LPSolution {
    LPStatus status = LPStatus::Infeasible;
    double objective = 0.0;
    std::vector<double> x;
    std::size_t iterations = 0;
    double max_residual = 0.0;
};

// Two-phase revised primal simplex with an explicit dense basis inverse.
// Pricing is Dantzig's rule. The ratio test is Harris' two-pass test, and a
// lexicographic one after a run of degenerate pivots, which prevents cycling.
// Throws CapacityError when the iteration cap is hit.
[[nodiscard]] LPSolution solve_lp(const LinearProgram& lp, const SimplexOptions& opt = {});

}  // namespace pcnf
