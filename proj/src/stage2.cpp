#include "mcmpc/stage2.hpp"

#include <string>

namespace mcmpc {

namespace {

std::vector<ZmpCoefficients> lipm_coefficients(const VerticalPlan& plan, double gravity) {
    std::vector<ZmpCoefficients> coeffs(plan.heights.size());
    for (Eigen::Index k = 0; k < plan.heights.size(); ++k) {
        coeffs[k].a = 1.0;
        coeffs[k].b = plan.heights(k) / gravity;
        coeffs[k].j.setZero();
    }
    return coeffs;
}

struct Blocks {
    Eigen::Index n;       // horizon
    Eigen::Index nv;      // velocity vector size
    Eigen::Index dim;     // total variables
    Eigen::Index jx, jy, dzx, dzy, qd;  // block offsets (-1 when absent)
};

Blocks layout(Eigen::Index n, Eigen::Index nv, bool unknown) {
    Blocks b;
    b.n = n;
    b.nv = nv;
    b.jx = 0;
    b.jy = n;
    b.dzx = unknown ? 2 * n : -1;
    b.dzy = unknown ? 3 * n : -1;
    b.qd = unknown ? 4 * n : 2 * n;
    b.dim = b.qd + nv;
    return b;
}

// rows appended to qp.ineq_*
struct RowBuffer {
    std::vector<Vec> rows;
    std::vector<double> lo, up;
    void add(Vec row, double l, double u) {
        rows.push_back(std::move(row));
        lo.push_back(l);
        up.push_back(u);
    }
    void emit(QpProblem& qp, Eigen::Index dim) const {
        const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
        qp.ineq_matrix.setZero(m, dim);
        qp.ineq_lower.resize(m);
        qp.ineq_upper.resize(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            qp.ineq_matrix.row(i) = rows[i].transpose();
            qp.ineq_lower(i) = lo[i];
            qp.ineq_upper(i) = up[i];
        }
    }
};

void add_zmp_rows(RowBuffer& buf, const Blocks& b, const ZmpPreviewOperators& ops,
                  const std::array<AxisState, 2>& state_xy, const SupportSchedule& schedule) {
    for (int axis = 0; axis < 2; ++axis) {
        const Vec base =
            ops.zmp_state * state_xy[axis].as_vector() + ops.zmp_offset.col(axis);
        const Eigen::Index joff = axis == 0 ? b.jx : b.jy;
        const Eigen::Index doff = axis == 0 ? b.dzx : b.dzy;
        for (Eigen::Index k = 0; k < b.n; ++k) {
            Vec row = Vec::Zero(b.dim);
            row.segment(joff, b.n) = ops.zmp_input.row(k).transpose();
            if (doff >= 0) row(doff + k) = 1.0;
            buf.add(std::move(row), schedule.zmp_lower(k, axis) - base(k),
                    schedule.zmp_upper(k, axis) - base(k));
        }
    }
}

void add_band_rows(RowBuffer& buf, const Blocks& b, const PreviewMatrices& matrices,
                   const std::array<AxisState, 2>& state_xy, const KinematicRefs& refs,
                   double reach_xy) {
    for (const auto& hand : refs.hands) {
        if (!hand.band) continue;
        if (hand.band_reference.rows() != b.n || hand.band_reference.cols() != 2)
            throw StructuralError("stage2: band reference must be N x 2");
        for (int axis = 0; axis < 2; ++axis) {
            const Vec base = matrices.pos_state * state_xy[axis].as_vector();
            const Eigen::Index joff = axis == 0 ? b.jx : b.jy;
            for (Eigen::Index k = 0; k < b.n; ++k) {
                Vec row = Vec::Zero(b.dim);
                row.segment(joff, b.n) = matrices.pos_input.row(k).transpose();
                const double r = hand.band_reference(k, axis);
                buf.add(std::move(row), r - reach_xy - base(k), r + reach_xy - base(k));
            }
        }
    }
}

void add_joint_rows(RowBuffer& buf, const Blocks& b, const RobotModel& model,
                    const JointState& joint_state, double dt) {
    const int nj = model.num_arm_joints();
    for (int i = 0; i < nj; ++i) {
        Vec row = Vec::Zero(b.dim);
        row(b.qd + 3 + i) = 1.0;
        // velocity limit and first-cycle position limit in one band
        const double lo = std::max(-model.joint_vel_limit,
                                   (model.joint_lower(i) - joint_state.arm_angles(i)) / dt);
        const double up = std::min(model.joint_vel_limit,
                                   (model.joint_upper(i) - joint_state.arm_angles(i)) / dt);
        buf.add(std::move(row), lo, up);
    }
}

void add_costs(QpProblem& qp, const Blocks& b, const Stage2Weights& w,
               const VerticalPlan& plan, const std::array<AxisState, 2>& state_xy,
               const PreviewMatrices& matrices, const KinematicRefs& refs,
               const RobotModel& model, const JointState& joint_state) {
    qp.hessian.setZero(b.dim, b.dim);
    qp.gradient.setZero(b.dim);

    qp.hessian.block(b.jx, b.jx, b.n, b.n).diagonal().array() += 2.0 * w.jerk_w;
    qp.hessian.block(b.jy, b.jy, b.n, b.n).diagonal().array() += 2.0 * w.jerk_w;
    if (b.dzx >= 0) {
        qp.hessian.block(b.dzx, b.dzx, b.n, b.n).diagonal().array() += 2.0 * w.delta_w;
        qp.hessian.block(b.dzy, b.dzy, b.n, b.n).diagonal().array() += 2.0 * w.delta_w;
    }
    qp.hessian.block(b.qd, b.qd, b.nv, b.nv).diagonal().array() += 2.0 * w.qdot_w;

    // CoM tracking couples qdot with the first-step predicted CoM velocity
    if (w.com_track_w > 0.0) {
        const Mat jcom = com_jacobian(model);
        Mat e = Mat::Zero(3, b.dim);
        e.block(0, b.qd, 3, b.nv) = jcom;
        e.block(0, b.jx, 1, b.n) = -matrices.vel_input.row(0);
        e.block(1, b.jy, 1, b.n) = -matrices.vel_input.row(0);
        Vec3 e0;
        e0(0) = -matrices.vel_state.row(0).dot(state_xy[0].as_vector());
        e0(1) = -matrices.vel_state.row(0).dot(state_xy[1].as_vector());
        e0(2) = -plan.velocities(0);
        qp.hessian += 2.0 * w.com_track_w * e.transpose() * e;
        qp.gradient += 2.0 * w.com_track_w * e.transpose() * e0;
    }

    if (w.hand_track_w > 0.0) {
        for (const auto& hand : refs.hands) {
            const Mat jh = hand_jacobian(model, joint_state, hand.arm_id);
            qp.hessian.block(b.qd, b.qd, b.nv, b.nv) +=
                2.0 * w.hand_track_w * jh.transpose() * jh;
            qp.gradient.segment(b.qd, b.nv) -=
                2.0 * w.hand_track_w * jh.transpose() * hand.velocity_ref;
        }
    }
}

}  // namespace

void SupportSchedule::validate(Eigen::Index horizon) const {
    if (zmp_lower.rows() != horizon || zmp_upper.rows() != horizon ||
        zmp_lower.cols() != 2 || zmp_upper.cols() != 2)
        throw StructuralError("stage2: support schedule shape must be N x 2");
    if (((zmp_upper - zmp_lower).array() <= 0.0).any())
        throw StructuralError("stage2: support bounds must satisfy lower < upper");
}

QpProblem build_stage2_known(const CentroidalParams& params, const VerticalPlan& vertical_plan,
                             const std::array<AxisState, 2>& state_xy,
                             const std::vector<ExternalContact>& contact_schedule,
                             const SupportSchedule& schedule, const Stage2Weights& weights,
                             const KinematicRefs& kin_refs, const RobotModel& model,
                             const JointState& joint_state, const PreviewMatrices& matrices) {
    const Eigen::Index n = matrices.pos_state.rows();
    if (vertical_plan.heights.size() != n)
        throw StructuralError("stage2: vertical plan length does not match horizon");
    if (static_cast<Eigen::Index>(contact_schedule.size()) != n)
        throw StructuralError("stage2: contact schedule length does not match horizon");
    schedule.validate(n);

    std::vector<ZmpCoefficients> coeffs(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        try {
            coeffs[k] = zmp_coefficients(params, vertical_plan.heights(k),
                                         vertical_plan.accelerations(k), contact_schedule[k]);
        } catch (const ModelError&) {
            throw ModelError("stage2: unloaded robot at horizon step " + std::to_string(k));
        }
    }
    const ZmpPreviewOperators ops = build_zmp_preview(coeffs, matrices);

    const Blocks b = layout(n, model.num_vel(), false);
    QpProblem qp;
    add_costs(qp, b, weights, vertical_plan, state_xy, matrices, kin_refs, model, joint_state);
    RowBuffer buf;
    add_zmp_rows(buf, b, ops, state_xy, schedule);
    add_band_rows(buf, b, matrices, state_xy, kin_refs, model.reach_xy);
    add_joint_rows(buf, b, model, joint_state, kin_refs.dt);
    buf.emit(qp, b.dim);
    return qp;
}

QpProblem build_stage2_unknown(const CentroidalParams& params, const VerticalPlan& vertical_plan,
                               const std::array<AxisState, 2>& state_xy,
                               const SupportSchedule& schedule, const Stage2Weights& weights,
                               const KinematicRefs& kin_refs, const RobotModel& model,
                               const JointState& joint_state, const PreviewMatrices& matrices) {
    const Eigen::Index n = matrices.pos_state.rows();
    if (vertical_plan.heights.size() != n)
        throw StructuralError("stage2: vertical plan length does not match horizon");
    if (weights.delta_w <= 0.0)
        throw StructuralError("stage2: delta_w must be positive in unknown-force mode");
    schedule.validate(n);

    const ZmpPreviewOperators ops =
        build_zmp_preview(lipm_coefficients(vertical_plan, params.gravity), matrices);

    const Blocks b = layout(n, model.num_vel(), true);
    QpProblem qp;
    add_costs(qp, b, weights, vertical_plan, state_xy, matrices, kin_refs, model, joint_state);
    RowBuffer buf;
    add_zmp_rows(buf, b, ops, state_xy, schedule);
    add_band_rows(buf, b, matrices, state_xy, kin_refs, model.reach_xy);
    add_joint_rows(buf, b, model, joint_state, kin_refs.dt);
    buf.emit(qp, b.dim);
    return qp;
}

Stage2Solution extract_stage2_solution(const QpSolution& sol, bool unknown_mode,
                                       const CentroidalParams& params,
                                       const VerticalPlan& vertical_plan,
                                       const std::array<AxisState, 2>& state_xy,
                                       const std::vector<ExternalContact>& contact_schedule,
                                       const PreviewMatrices& matrices, int num_vel) {
    const Eigen::Index n = matrices.pos_state.rows();
    const Blocks b = layout(n, num_vel, unknown_mode);
    if (sol.primal.size() != b.dim)
        throw StructuralError("stage2: solution size does not match layout");

    Stage2Solution out;
    out.jerks_xy.resize(n, 2);
    out.jerks_xy.col(0) = sol.primal.segment(b.jx, n);
    out.jerks_xy.col(1) = sol.primal.segment(b.jy, n);
    out.delta_z.setZero(n, 2);
    if (unknown_mode) {
        out.delta_z.col(0) = sol.primal.segment(b.dzx, n);
        out.delta_z.col(1) = sol.primal.segment(b.dzy, n);
    }
    out.qdot = sol.primal.segment(b.qd, b.nv);

    std::vector<ZmpCoefficients> coeffs;
    if (unknown_mode) {
        coeffs = lipm_coefficients(vertical_plan, params.gravity);
    } else {
        coeffs.resize(n);
        for (Eigen::Index k = 0; k < n; ++k)
            coeffs[k] = zmp_coefficients(params, vertical_plan.heights(k),
                                         vertical_plan.accelerations(k), contact_schedule[k]);
    }
    const ZmpPreviewOperators ops = build_zmp_preview(coeffs, matrices);
    out.predicted_zmp.resize(n, 2);
    for (int axis = 0; axis < 2; ++axis)
        out.predicted_zmp.col(axis) = ops.zmp_state * state_xy[axis].as_vector() +
                                      ops.zmp_input * out.jerks_xy.col(axis) +
                                      ops.zmp_offset.col(axis) + out.delta_z.col(axis);
    return out;
}

std::optional<int> detect_contact_need(const Mat& delta_z, double threshold) {
    if (threshold <= 0.0) throw StructuralError("detect_contact_need: threshold must be positive");
    for (Eigen::Index k = 0; k < delta_z.rows(); ++k)
        if (delta_z.row(k).cwiseAbs().maxCoeff() > threshold) return static_cast<int>(k);
    return std::nullopt;
}

}  // namespace mcmpc
