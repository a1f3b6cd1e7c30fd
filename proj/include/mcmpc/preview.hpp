#pragma once

#include <memory>

#include "mcmpc/types.hpp"

namespace mcmpc {

struct PreviewParams {
    int steps = 16;    // horizon length N
    double dt = 0.1;   // sample time T [s]
};

/// Position/velocity/acceleration of one CoM axis.
struct AxisState {
    double position = 0.0;
    double velocity = 0.0;
    double acceleration = 0.0;

    Vec3 as_vector() const { return Vec3(position, velocity, acceleration); }
};

/// Stacked horizon operators of the triple integrator: predicted
/// positions/velocities/accelerations over N steps are
///   P_*s * state + P_*u * jerks.
struct PreviewMatrices {
    Mat pos_state, pos_input;   // N x 3, N x N
    Mat vel_state, vel_input;
    Mat acc_state, acc_input;
    PreviewParams params;
};

/// One step of the constant-jerk triple integrator.
AxisState propagate_axis(const AxisState& state, double jerk, double dt);

PreviewMatrices build_preview_matrices(const PreviewParams& params);

/// Cached access keyed on (N, T); the MPC loop reuses the same horizon
/// every cycle. Returned matrices are immutable.
std::shared_ptr<const PreviewMatrices> preview_matrices_cached(const PreviewParams& params);

}  // namespace mcmpc
