#include <algorithm>
#include <cmath>
#include <sstream>

#include "pcnf/errors.hpp"
#include "pcnf/lp.hpp"

namespace pcnf {

std::size_t LinearProgram::num_nonzeros() const
{
    std::size_t n = 0;
    for (const auto& c : cols) n += c.size();
    return n;
}

std::size_t LinearProgram::add_row(std::string name, double b)
{
    row_names.push_back(std::move(name));
    rhs.push_back(b);
    return rhs.size() - 1;
}

std::size_t LinearProgram::add_col(std::string name, double c)
{
    col_names.push_back(std::move(name));
    cost.push_back(c);
    cols.emplace_back();
    return cost.size() - 1;
}

void LinearProgram::add_entry(std::size_t row, std::size_t col, double v)
{
    for (Entry& e : cols[col])
        if (e.first == row) {
            e.second += v;
            return;
        }
    cols[col].emplace_back(static_cast<std::uint32_t>(row), v);
}

double LinearProgram::residual(const std::vector<double>& x) const
{
    std::vector<double> ax(num_rows(), 0.0);
    double worst = 0.0;
    for (std::size_t j = 0; j < num_cols(); ++j) {
        worst = std::max(worst, -x[j]);
        for (const Entry& e : cols[j]) ax[e.first] += e.second * x[j];
    }
    for (std::size_t i = 0; i < num_rows(); ++i) worst = std::max(worst, std::abs(ax[i] - rhs[i]));
    return worst;
}

double LinearProgram::objective(const std::vector<double>& x) const
{
    double v = 0.0;
    for (std::size_t j = 0; j < num_cols(); ++j) v += cost[j] * x[j];
    return v;
}

const char* lp_status_name(LPStatus s)
{
    switch (s) {
    case LPStatus::Optimal: return "optimal";
    case LPStatus::Infeasible: return "infeasible";
    case LPStatus::Unbounded: return "unbounded";
    }
    return "unknown";
}

namespace {

class RevisedSimplex {
public:
    RevisedSimplex(const LinearProgram& lp, const SimplexOptions& opt)
        : lp_(lp), opt_(opt), m_(lp.num_rows()), n_(lp.num_cols())
    {
        max_iter_ = opt.max_iterations ? opt.max_iterations : 50 * (m_ + n_) + 1000;
        sign_.assign(m_, 1.0);
        b_ = lp.rhs;
        for (std::size_t i = 0; i < m_; ++i)
            if (b_[i] < 0.0) sign_[i] = -1.0, b_[i] = -b_[i];
        cols_.resize(n_);
        for (std::size_t j = 0; j < n_; ++j)
            for (const auto& [r, v] : lp.cols[j])
                if (v != 0.0) cols_[j].emplace_back(r, v * sign_[r]);
        basis_.resize(m_);
        pos_.assign(n_ + m_, npos_);
        for (std::size_t i = 0; i < m_; ++i) basis_[i] = n_ + i, pos_[n_ + i] = i;
        binv_.assign(m_ * m_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) binv_[i * m_ + i] = 1.0;
        xb_ = b_;
    }

    LPSolution run()
    {
        LPSolution sol;
        if (!iterate(1)) throw Error("simplex: phase 1 reported unboundedness");
        refactor();
        double w = 0.0, bnorm = 0.0;
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] >= n_) w += std::max(0.0, xb_[i]);
            bnorm += std::abs(b_[i]);
        }
        sol.iterations = iter_;
        if (w > opt_.feasibility_tol * (1.0 + bnorm)) {
            sol.status = LPStatus::Infeasible;
            sol.objective = INFINITY;
            return sol;
        }
        drive_out_artificials();
        const bool bounded = iterate(2);
        refactor();
        sol.iterations = iter_;
        sol.x.assign(n_, 0.0);
        for (std::size_t i = 0; i < m_; ++i)
            if (basis_[i] < n_) sol.x[basis_[i]] = std::abs(xb_[i]) <= opt_.feasibility_tol ? 0.0 : xb_[i];
        if (!bounded) {
            sol.status = LPStatus::Unbounded;
            sol.objective = -INFINITY;
            return sol;
        }
        sol.status = LPStatus::Optimal;
        sol.objective = lp_.objective(sol.x);
        sol.max_residual = lp_.residual(sol.x);
        return sol;
    }

private:
    static constexpr std::size_t npos_ = static_cast<std::size_t>(-1);

    double cost(std::size_t j, int phase) const
    {
        if (phase == 1) return j >= n_ ? 1.0 : 0.0;
        return j < n_ ? lp_.cost[j] : 0.0;
    }

    // B^-1 is stored column-major: column k is binv_[k * m_ .. k * m_ + m_).
    double& inv(std::size_t i, std::size_t k) { return binv_[k * m_ + i]; }

    // alpha = B^-1 a_j
    void ftran(std::size_t j, std::vector<double>& alpha) const
    {
        std::fill(alpha.begin(), alpha.end(), 0.0);
        auto add = [&](std::size_t r, double v) {
            const double* col = &binv_[r * m_];
            for (std::size_t i = 0; i < m_; ++i) alpha[i] += v * col[i];
        };
        if (j >= n_) {
            add(j - n_, 1.0);
        } else {
            for (const auto& [r, v] : cols_[j]) add(r, v);
        }
    }

    // y = c_B^T B^-1
    void compute_duals(int phase, std::vector<double>& y) const
    {
        std::vector<double> cb(m_);
        for (std::size_t i = 0; i < m_; ++i) cb[i] = cost(basis_[i], phase);
        for (std::size_t k = 0; k < m_; ++k) {
            const double* col = &binv_[k * m_];
            double s = 0.0;
            for (std::size_t i = 0; i < m_; ++i) s += cb[i] * col[i];
            y[k] = s;
        }
    }

    // Returns false when the LP is unbounded in this phase.
    bool iterate(int phase)
    {
        std::vector<double> y(m_), alpha(m_);
        compute_duals(phase, y);
        std::size_t degenerate = 0, since_refactor = 0;
        for (;;) {
            if (iter_ >= max_iter_) {
                std::ostringstream msg;
                msg << "simplex iteration cap " << max_iter_ << " exceeded (" << m_ << " rows, " << n_
                    << " columns, phase " << phase << ")";
                throw CapacityError(msg.str());
            }
            const bool stalled = degenerate >= opt_.stall_after;
            std::size_t q = npos_;
            double best = -opt_.optimality_tol, dq = 0.0;
            for (std::size_t j = 0; j < n_; ++j) {
                if (pos_[j] != npos_) continue;
                double d = cost(j, phase);
                for (const auto& [r, v] : cols_[j]) d -= y[r] * v;
                if (d < best) q = j, dq = d, best = d;
            }
            if (q == npos_) return true;

            ftran(q, alpha);
            const std::size_t r = stalled ? ratio_lexicographic(phase, alpha) : ratio_harris(phase, alpha);
            if (r == npos_) return false;

            const double theta = basis_[r] >= n_ && phase == 2 ? 0.0 : std::max(xb_[r], 0.0) / alpha[r];
            pivot(r, q, alpha, theta);
            ++iter_;
            degenerate = theta <= 1e-12 ? degenerate + 1 : 0;
            if (++since_refactor >= opt_.refactor_every) {
                refactor();
                compute_duals(phase, y);
                since_refactor = 0;
            } else {
                // y' = y + d_q * (row r of the new inverse)
                for (std::size_t k = 0; k < m_; ++k) y[k] += dq * binv_[k * m_ + r];
            }
        }
    }

    // Rows that can leave: positive pivots, plus (phase 2) any artificial kept
    // for a redundant row, which must leave at zero.
    bool eligible(int phase, std::size_t i, const std::vector<double>& alpha, double tol) const
    {
        if (phase == 2 && basis_[i] >= n_) return std::abs(alpha[i]) > tol;
        return alpha[i] > tol;
    }

    double pivot_floor(const std::vector<double>& alpha) const
    {
        double amax = 0.0;
        for (double a : alpha) amax = std::max(amax, std::abs(a));
        return std::max(opt_.pivot_tol, 1e-7 * amax);
    }

    // Two passes: the largest step allowed with every basic variable relaxed
    // by the feasibility tolerance, then the largest pivot among the rows
    // blocking within that step.
    std::size_t ratio_harris(int phase, const std::vector<double>& alpha) const
    {
        const double floor = pivot_floor(alpha);
        double bound = INFINITY;
        for (std::size_t i = 0; i < m_; ++i) {
            if (!eligible(phase, i, alpha, floor)) continue;
            if (phase == 2 && basis_[i] >= n_) return i;
            bound = std::min(bound, (std::max(xb_[i], 0.0) + opt_.feasibility_tol) / alpha[i]);
        }
        std::size_t r = npos_;
        for (std::size_t i = 0; i < m_; ++i) {
            if (!eligible(phase, i, alpha, floor)) continue;
            if (std::max(xb_[i], 0.0) / alpha[i] <= bound && (r == npos_ || alpha[i] > alpha[r])) r = i;
        }
        return r;
    }

    // Minimum ratio with ties broken by the lexicographically smallest row of
    // B^-1 / alpha_i. Starting from the identity basis this rules out cycling.
    std::size_t ratio_lexicographic(int phase, const std::vector<double>& alpha) const
    {
        const double floor = pivot_floor(alpha);
        std::size_t r = npos_;
        double theta = INFINITY;
        for (std::size_t i = 0; i < m_; ++i) {
            if (!eligible(phase, i, alpha, floor)) continue;
            if (phase == 2 && basis_[i] >= n_) return i;
            const double t = std::max(xb_[i], 0.0) / alpha[i];
            bool take = r == npos_ || t < theta - 1e-12;
            if (!take && t <= theta + 1e-12) {
                for (std::size_t k = 0; k < m_; ++k) {
                    const double a = binv_[k * m_ + i] / alpha[i], b = binv_[k * m_ + r] / alpha[r];
                    if (std::abs(a - b) <= 1e-12) continue;
                    take = a < b;
                    break;
                }
            }
            if (take) r = i, theta = std::min(theta, t);
        }
        return r;
    }

    // Replace basis_[r] by column q; alpha = B^-1 a_q.
    void update_inverse(std::size_t r, const std::vector<double>& alpha)
    {
        const double ar = alpha[r];
        for (std::size_t k = 0; k < m_; ++k) {
            double* col = &binv_[k * m_];
            const double p = col[r];
            if (p == 0.0) continue;
            const double pr = p / ar;
            for (std::size_t i = 0; i < m_; ++i) col[i] -= alpha[i] * pr;
            col[r] = pr;
        }
    }

    void pivot(std::size_t r, std::size_t q, const std::vector<double>& alpha, double theta)
    {
        for (std::size_t i = 0; i < m_; ++i) xb_[i] -= theta * alpha[i];
        xb_[r] = theta;
        update_inverse(r, alpha);
        pos_[basis_[r]] = npos_;
        basis_[r] = q;
        pos_[q] = r;
    }

    // Pivot zero-valued artificials out of the basis where some structural
    // column has a nonzero entry in their row; the rest mark redundant rows.
    void drive_out_artificials()
    {
        std::vector<double> alpha(m_), row(m_);
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] < n_) continue;
            for (std::size_t k = 0; k < m_; ++k) row[k] = binv_[k * m_ + i];
            std::size_t q = npos_;
            double best = 1e-7;
            for (std::size_t j = 0; j < n_; ++j) {
                if (pos_[j] != npos_) continue;
                double v = 0.0;
                for (const auto& [r, a] : cols_[j]) v += row[r] * a;
                if (std::abs(v) > best) best = std::abs(v), q = j;
            }
            if (q == npos_) continue;
            ftran(q, alpha);
            pivot(i, q, alpha, 0.0);
        }
    }

    // Rebuild B^-1 from scratch: start from the all-artificial basis (the
    // identity), keep the basic artificials in their own rows and pivot the
    // basic structural columns in one at a time, largest pivot first among
    // the rows still free. Basis positions may be permuted.
    void refactor()
    {
        std::vector<std::size_t> structural;
        std::vector<char> locked(m_, 0);
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] < n_)
                structural.push_back(basis_[i]);
            else
                locked[basis_[i] - n_] = 1;
        }
        std::fill(binv_.begin(), binv_.end(), 0.0);
        for (std::size_t i = 0; i < m_; ++i) binv_[i * m_ + i] = 1.0;
        std::fill(pos_.begin(), pos_.end(), npos_);
        for (std::size_t i = 0; i < m_; ++i) basis_[i] = n_ + i, pos_[n_ + i] = i;
        std::vector<double> alpha(m_);
        for (std::size_t j : structural) {
            ftran(j, alpha);
            std::size_t r = npos_;
            for (std::size_t i = 0; i < m_; ++i)
                if (!locked[i] && (r == npos_ || std::abs(alpha[i]) > std::abs(alpha[r]))) r = i;
            if (r == npos_ || std::abs(alpha[r]) < 1e-12) throw Error("simplex: basis became singular");
            update_inverse(r, alpha);
            pos_[basis_[r]] = npos_;
            basis_[r] = j;
            pos_[j] = r;
            locked[r] = 1;
        }
        std::fill(xb_.begin(), xb_.end(), 0.0);
        for (std::size_t k = 0; k < m_; ++k) {
            if (b_[k] == 0.0) continue;
            const double* col = &binv_[k * m_];
            for (std::size_t i = 0; i < m_; ++i) xb_[i] += col[i] * b_[k];
        }
    }

    const LinearProgram& lp_;
    SimplexOptions opt_;
    std::size_t m_, n_;
    std::size_t max_iter_ = 0, iter_ = 0;
    std::vector<double> sign_, b_;
    std::vector<std::vector<std::pair<std::uint32_t, double>>> cols_;
    std::vector<std::size_t> basis_, pos_;
    std::vector<double> binv_, xb_;
};

}  // namespace

LPSolution solve_lp(const LinearProgram& lp, const SimplexOptions& opt)
{
    if (lp.cols.size() != lp.cost.size() || lp.row_names.size() != lp.rhs.size() ||
        lp.col_names.size() != lp.cost.size())
        throw InputError("malformed linear program");
    for (const auto& c : lp.cols)
        for (const auto& [r, v] : c)
            if (r >= lp.num_rows() || !std::isfinite(v)) throw InputError("malformed linear program");
    return RevisedSimplex(lp, opt).run();
}

}  // namespace pcnf
