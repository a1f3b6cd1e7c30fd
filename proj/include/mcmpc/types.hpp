#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace mcmpc {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Malformed problem data: mismatched dimensions, missing fields.
struct StructuralError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Physically or mathematically invalid model input (non-PSD Hessian,
/// unloaded robot, singular contact geometry, infeasible task band).
struct ModelError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Non-finite values where finite ones are required.
struct NumericError : std::domain_error {
    using std::domain_error::domain_error;
};

}  // namespace mcmpc
