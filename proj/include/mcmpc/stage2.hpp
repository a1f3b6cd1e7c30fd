#pragma once

#include <array>
#include <optional>
#include <vector>

#include "mcmpc/kinematics.hpp"
#include "mcmpc/qp.hpp"
#include "mcmpc/stage1.hpp"
#include "mcmpc/zmp.hpp"

namespace mcmpc {

/// Per-step axis-aligned ZMP rectangles from the footstep plan
/// (already shrunk by the safety margin).
struct SupportSchedule {
    Mat zmp_lower;  // N x 2
    Mat zmp_upper;  // N x 2
    void validate(Eigen::Index horizon) const;
};

struct Stage2Weights {
    double jerk_w = 1.0;        // alpha_1
    double delta_w = 10.0;      // alpha_2
    double qdot_w = 1e-2;       // alpha_3
    double com_track_w = 1.0;   // alpha_4
    double hand_track_w = 1.0;  // alpha_5
};

/// One hand task: desired hand velocity plus, optionally, the horizontal
/// CoM-to-reference band over the horizon.
struct HandTask {
    int arm_id = 0;
    Vec3 velocity_ref = Vec3::Zero();
    bool band = true;
    Mat band_reference;  // N x 2 when band is set
};

struct KinematicRefs {
    std::vector<HandTask> hands;
    double dt = 0.1;  // joint-limit lookahead horizon for the first cycle
};

struct Stage2Solution {
    Mat jerks_xy;       // N x 2
    Mat delta_z;        // N x 2, identically zero in known-force mode
    Vec qdot;           // first-cycle [torso velocity; arm rates]
    Mat predicted_zmp;  // N x 2
};

/// Known-force mode: external force/location fixed per step, ZMP constraint
/// built from the exact per-step coefficients. No slack variables.
/// Variable layout: [jerks_x (N), jerks_y (N), qdot].
QpProblem build_stage2_known(const CentroidalParams& params, const VerticalPlan& vertical_plan,
                             const std::array<AxisState, 2>& state_xy,
                             const std::vector<ExternalContact>& contact_schedule,
                             const SupportSchedule& schedule, const Stage2Weights& weights,
                             const KinematicRefs& kin_refs, const RobotModel& model,
                             const JointState& joint_state, const PreviewMatrices& matrices);

/// Unknown-force mode: LIPM ZMP plus the contact-need slack.
/// Variable layout: [jerks_x, jerks_y, delta_x (N), delta_y (N), qdot].
QpProblem build_stage2_unknown(const CentroidalParams& params, const VerticalPlan& vertical_plan,
                               const std::array<AxisState, 2>& state_xy,
                               const SupportSchedule& schedule, const Stage2Weights& weights,
                               const KinematicRefs& kin_refs, const RobotModel& model,
                               const JointState& joint_state, const PreviewMatrices& matrices);

Stage2Solution extract_stage2_solution(const QpSolution& sol, bool unknown_mode,
                                       const CentroidalParams& params,
                                       const VerticalPlan& vertical_plan,
                                       const std::array<AxisState, 2>& state_xy,
                                       const std::vector<ExternalContact>& contact_schedule,
                                       const PreviewMatrices& matrices, int num_vel);

/// Smallest horizon index whose slack exceeds the threshold in infinity
/// norm, or nullopt when the whole horizon is (close to) slack-free.
std::optional<int> detect_contact_need(const Mat& delta_z, double threshold);

}  // namespace mcmpc
