#pragma once

#include <limits>

#include "mcmpc/types.hpp"

namespace mcmpc {

/// Dense convex QP
///
///   min  1/2 x' H x + g' x
///   s.t. eq_matrix x = eq_rhs
///        ineq_lower <= ineq_matrix x <= ineq_upper
///        var_lower  <= x <= var_upper            (optional, empty = free)
///
/// Infinite entries in the bound vectors mean "unbounded on that side".
struct QpProblem {
    Mat hessian;
    Vec gradient;
    Mat eq_matrix;
    Vec eq_rhs;
    Mat ineq_matrix;
    Vec ineq_lower;
    Vec ineq_upper;
    Vec var_lower;
    Vec var_upper;

    Eigen::Index num_vars() const { return gradient.size(); }
    Eigen::Index num_eq() const { return eq_rhs.size(); }
    Eigen::Index num_ineq() const { return ineq_lower.size(); }
    bool has_box() const { return var_lower.size() > 0; }

    /// Checks dimensions (StructuralError), symmetry and positive
    /// semidefiniteness of the regularized Hessian (ModelError).
    void validate() const;
};

enum class QpStatus { optimal, infeasible, max_iter };

/// Multiplier sign convention: for a two-sided row l <= a'x <= u the single
/// multiplier is positive when the upper bound is active and negative when
/// the lower bound is active, so stationarity reads
///   H x + g + eq_matrix' dual_eq + C' dual_ineq = 0
/// with C = [ineq_matrix; I_box]. dual_ineq stacks the inequality rows first,
/// then the box rows when box bounds are present.
struct QpSolution {
    Vec primal;
    Vec dual_eq;
    Vec dual_ineq;
    QpStatus status = QpStatus::max_iter;
    double objective = 0.0;
};

struct QpConfig {
    double tol = 1e-8;
    int max_iter = 200;
    Vec initial_point;  // optional warm-start hint
};

QpSolution solve_qp(const QpProblem& problem, const QpConfig& config = {});
QpSolution solve_qp(const QpProblem& problem, double tol, int max_iter);

/// Max over the stationarity, primal-feasibility, dual-feasibility and
/// complementarity infinity norms for (problem, solution).
double kkt_residual(const QpProblem& problem, const QpSolution& solution);

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace mcmpc
