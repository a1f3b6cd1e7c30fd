#pragma once

#include <vector>

#include "mcmpc/types.hpp"

namespace mcmpc {

struct ArmJoint {
    Vec3 axis = Vec3::UnitY();   // rotation axis in the parent frame
    Vec3 link = Vec3::Zero();    // vector to the next joint (or hand) in the joint frame
};

struct ArmChain {
    Vec3 shoulder_offset = Vec3::Zero();  // mount point in the torso frame
    std::vector<ArmJoint> joints;
};

/// Reduced kinematic model: the torso is a free 3-DoF translational virtual
/// joint carrying the point-mass CoM; only the arms are articulated. Arm
/// mass does not move the CoM.
struct RobotModel {
    double total_mass = 30.0;
    Vec3 torso_offset = Vec3::Zero();  // CoM position in the torso frame
    std::vector<ArmChain> arms;
    Vec joint_lower, joint_upper;      // [rad], stacked across arms
    double joint_vel_limit = 3.0;      // [rad/s]
    double reach_xy = 0.35;            // [m], horizontal CoM-to-hand band
    double reach_z = 0.35;             // [m], vertical CoM-to-reference band
    double com_floor = 0.3;
    double com_ceiling = 1.2;

    int num_arm_joints() const;
    /// full velocity vector size: torso linear velocity + arm joint rates
    int num_vel() const { return 3 + num_arm_joints(); }
    void validate() const;

    /// shoulder-pitch / shoulder-roll / elbow-pitch arms, 0.25 m links
    static RobotModel default_model();
};

struct JointState {
    Vec3 torso_position = Vec3::Zero();
    Vec arm_angles;      // [rad], stacked across arms
    Vec arm_velocities;  // [rad/s]
};

struct FkResult {
    std::vector<Vec3> hand_positions;
    Vec3 com;
};

FkResult forward_kinematics(const RobotModel& model, const JointState& state);

/// 3 x num_vel analytic Jacobian of the hand position of one arm with
/// respect to [torso velocity; all arm joint rates].
Mat hand_jacobian(const RobotModel& model, const JointState& state, int arm_id);

/// 3 x num_vel CoM Jacobian: identity on the torso columns, zero elsewhere.
Mat com_jacobian(const RobotModel& model);

}  // namespace mcmpc
