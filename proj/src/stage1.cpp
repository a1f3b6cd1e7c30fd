#include "mcmpc/stage1.hpp"

#include <string>

namespace mcmpc {

namespace {
constexpr double kCenteringWeight = 1e-4;

void effective_band(const VerticalTask& task, Vec& lb, Vec& ub) {
    const Eigen::Index n = task.reference.size();
    lb.resize(n);
    ub.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        lb(k) = std::max(task.reference(k) - task.reach, task.com_floor);
        ub(k) = std::min(task.reference(k) + task.reach, task.com_ceiling);
        if (lb(k) > ub(k))
            throw ModelError("stage1: empty admissible height interval at step " +
                             std::to_string(k));
    }
}
}  // namespace

QpProblem build_stage1_qp(const VerticalTask& task, const AxisState& state,
                          const PreviewMatrices& matrices) {
    const Eigen::Index n = matrices.pos_state.rows();
    if (task.reference.size() != n)
        throw StructuralError("stage1: reference length does not match horizon");
    if (task.reach <= 0.0 || task.com_floor >= task.com_ceiling ||
        !task.reference.allFinite())
        throw StructuralError("stage1: invalid task parameters");

    Vec lb, ub;
    effective_band(task, lb, ub);

    const Vec3 s = state.as_vector();
    const Vec base = matrices.pos_state * s;

    QpProblem qp;
    qp.hessian = 2.0 * Mat::Identity(n, n);
    qp.gradient = Vec::Zero(n);
    if (task.centering) {
        const Vec mid = 0.5 * (lb + ub);
        qp.hessian += 2.0 * kCenteringWeight * matrices.pos_input.transpose() *
                      matrices.pos_input;
        qp.gradient += 2.0 * kCenteringWeight * matrices.pos_input.transpose() * (base - mid);
    }
    qp.ineq_matrix = matrices.pos_input;
    qp.ineq_lower = lb - base;
    qp.ineq_upper = ub - base;
    return qp;
}

VerticalPlan solve_stage1(const VerticalTask& task, const AxisState& state,
                          const PreviewMatrices& matrices, const QpConfig& config) {
    const QpProblem qp = build_stage1_qp(task, state, matrices);
    const QpSolution sol = solve_qp(qp, config);
    if (sol.status != QpStatus::optimal) {
        // report the most violated step for diagnostics
        const Vec pred = qp.ineq_matrix * sol.primal;
        Eigen::Index worst = 0;
        double worst_v = 0.0;
        for (Eigen::Index k = 0; k < pred.size(); ++k) {
            const double v = std::max(qp.ineq_lower(k) - pred(k), pred(k) - qp.ineq_upper(k));
            if (v > worst_v) {
                worst_v = v;
                worst = k;
            }
        }
        throw ModelError("stage1: QP " +
                         std::string(sol.status == QpStatus::infeasible ? "infeasible"
                                                                        : "did not converge") +
                         ", worst violation at step " + std::to_string(worst));
    }

    const Vec3 s = state.as_vector();
    VerticalPlan plan;
    plan.jerks = sol.primal;
    plan.heights = matrices.pos_state * s + matrices.pos_input * plan.jerks;
    plan.velocities = matrices.vel_state * s + matrices.vel_input * plan.jerks;
    plan.accelerations = matrices.acc_state * s + matrices.acc_input * plan.jerks;
    return plan;
}

}  // namespace mcmpc
