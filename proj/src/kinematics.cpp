#include "mcmpc/kinematics.hpp"

#include <Eigen/Geometry>

#include <string>

namespace mcmpc {

namespace {

void check_state(const RobotModel& model, const JointState& state) {
    const int nj = model.num_arm_joints();
    if (state.arm_angles.size() != nj)
        throw StructuralError("kinematics: arm angle vector size mismatch");
    for (int i = 0; i < nj; ++i) {
        if (state.arm_angles(i) < model.joint_lower(i) - 1e-9 ||
            state.arm_angles(i) > model.joint_upper(i) + 1e-9)
            throw ModelError("kinematics: joint " + std::to_string(i) + " outside limits");
    }
}

}  // namespace

int RobotModel::num_arm_joints() const {
    int n = 0;
    for (const auto& arm : arms) n += static_cast<int>(arm.joints.size());
    return n;
}

void RobotModel::validate() const {
    if (total_mass <= 0.0) throw StructuralError("robot: total_mass must be positive");
    const int nj = num_arm_joints();
    if (joint_lower.size() != nj || joint_upper.size() != nj)
        throw StructuralError("robot: joint limit vector size mismatch");
    for (int i = 0; i < nj; ++i)
        if (joint_lower(i) >= joint_upper(i))
            throw StructuralError("robot: joint_lower must be below joint_upper");
    for (const auto& arm : arms)
        for (const auto& j : arm.joints) {
            if (j.link.norm() <= 0.0) throw StructuralError("robot: zero link length");
            if (std::abs(j.axis.norm() - 1.0) > 1e-9)
                throw StructuralError("robot: joint axis must be a unit vector");
        }
    if (reach_xy <= 0.0 || reach_z <= 0.0 || com_floor >= com_ceiling)
        throw StructuralError("robot: invalid reach/height parameters");
}

RobotModel RobotModel::default_model() {
    RobotModel m;
    auto make_arm = [](double side) {
        ArmChain arm;
        arm.shoulder_offset = Vec3(0.0, side * 0.15, 0.25);
        arm.joints = {
            {Vec3::UnitY(), Vec3(0.0, 0.0, -0.25)},  // shoulder pitch, upper arm
            {Vec3::UnitX(), Vec3(0.0, 0.0, -0.25)},  // shoulder roll
            {Vec3::UnitY(), Vec3(0.0, 0.0, -0.10)},  // elbow pitch, hand offset
        };
        return arm;
    };
    m.arms = {make_arm(+1.0), make_arm(-1.0)};
    const int nj = m.num_arm_joints();
    m.joint_lower = Vec::Constant(nj, -2.8);
    m.joint_upper = Vec::Constant(nj, 2.8);
    return m;
}

FkResult forward_kinematics(const RobotModel& model, const JointState& state) {
    check_state(model, state);
    FkResult out;
    out.com = state.torso_position + model.torso_offset;
    int q_index = 0;
    for (const auto& arm : model.arms) {
        Vec3 p = state.torso_position + arm.shoulder_offset;
        Mat3 r = Mat3::Identity();
        for (const auto& joint : arm.joints) {
            r = r * Eigen::AngleAxisd(state.arm_angles(q_index), joint.axis).toRotationMatrix();
            p += r * joint.link;
            ++q_index;
        }
        out.hand_positions.push_back(p);
    }
    return out;
}

Mat hand_jacobian(const RobotModel& model, const JointState& state, int arm_id) {
    check_state(model, state);
    if (arm_id < 0 || arm_id >= static_cast<int>(model.arms.size()))
        throw StructuralError("hand_jacobian: arm_id out of range");

    Mat jac = Mat::Zero(3, model.num_vel());
    jac.leftCols<3>().setIdentity();  // torso translation carries the hand

    // forward pass to joint origins and world axes of the requested arm
    int q_index = 0;
    for (int a = 0; a < arm_id; ++a) q_index += static_cast<int>(model.arms[a].joints.size());
    const auto& arm = model.arms[arm_id];

    Vec3 p = state.torso_position + arm.shoulder_offset;
    Mat3 r = Mat3::Identity();
    std::vector<Vec3> joint_origins, world_axes;
    for (std::size_t j = 0; j < arm.joints.size(); ++j) {
        joint_origins.push_back(p);
        world_axes.push_back(r * arm.joints[j].axis);
        r = r * Eigen::AngleAxisd(state.arm_angles(q_index + static_cast<int>(j)),
                                  arm.joints[j].axis)
                    .toRotationMatrix();
        p += r * arm.joints[j].link;
    }
    const Vec3 hand = p;
    for (std::size_t j = 0; j < arm.joints.size(); ++j)
        jac.col(3 + q_index + static_cast<int>(j)) =
            world_axes[j].cross(hand - joint_origins[j]);
    return jac;
}

Mat com_jacobian(const RobotModel& model) {
    Mat jac = Mat::Zero(3, model.num_vel());
    jac.leftCols<3>().setIdentity();
    return jac;
}

}  // namespace mcmpc
