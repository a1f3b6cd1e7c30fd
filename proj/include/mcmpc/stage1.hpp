#pragma once

#include "mcmpc/preview.hpp"
#include "mcmpc/qp.hpp"
#include "mcmpc/types.hpp"

namespace mcmpc {

/// Vertical CoM task: per-step end-effector height reference, the vertical
/// reach band around it, and absolute CoM height limits from joint limits.
struct VerticalTask {
    Vec reference;           // [m], one entry per horizon step
    double reach = 0.3;      // [m], max |com_z - reference|
    double com_floor = 0.0;  // [m]
    double com_ceiling = 2.0;
    bool centering = false;  // weakly weighted band-midpoint objective
};

struct VerticalPlan {
    Vec heights;
    Vec velocities;
    Vec accelerations;
    Vec jerks;
};

/// Decision variables are the N vertical jerks; cost is their squared norm
/// (plus the optional centering term); constraints keep every predicted
/// height inside [ref - reach, ref + reach] and [floor, ceiling].
/// Throws ModelError before solving when the admissible interval is empty
/// at some step.
QpProblem build_stage1_qp(const VerticalTask& task, const AxisState& state,
                          const PreviewMatrices& matrices);

VerticalPlan solve_stage1(const VerticalTask& task, const AxisState& state,
                          const PreviewMatrices& matrices, const QpConfig& config = {});

}  // namespace mcmpc
