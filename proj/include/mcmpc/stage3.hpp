#pragma once

#include <string>
#include <vector>

#include "mcmpc/types.hpp"
#include "mcmpc/zmp.hpp"

namespace mcmpc {

struct ContactCandidate {
    std::string id;
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();
    double mu = 0.5;
    double weight = 0.0;     // selection priority, lower = preferred
    bool reachable = true;

    void validate() const;
};

/// Four-facet inner linearization of the Coulomb cone: per tangent axis the
/// bound is mu/sqrt(2) times the normal component, so every admitted force
/// lies inside the exact cone. Rows r satisfy feasibility as r . f <= 0.
struct FrictionPyramid {
    Mat facets;  // 4 x 3

    static FrictionPyramid from_contact(const Vec3& normal, double mu);
};

struct FrictionResult {
    bool feasible = false;
    double violation = 0.0;  // max positive facet residual
};

FrictionResult friction_check(const FrictionPyramid& pyramid, const Vec3& force);

struct ContactDecision {
    std::string selected;
    Vec fz_trajectory;    // vertical force component per horizon step
    Mat f_xy_trajectory;  // N x 2 tangential components (world frame)
    double objective = 0.0;
};

struct StepState {
    Vec3 com = Vec3::Zero();
    Vec3 com_acc = Vec3::Zero();
};

/// Per-candidate convex enumeration of the one-hot contact MIQP: for each
/// reachable candidate solve min ||fz||^2 + w_i subject to the pyramid and
/// fz >= 0, with the tangential force eliminated through the exact
/// back-substitution so the slack trajectory is matched exactly. Steps whose
/// slack is (numerically) zero fix fz = 0. Ties break on lexicographically
/// smallest id. Throws ModelError when no reachable candidate is feasible.
ContactDecision solve_contact_selection(const std::vector<ContactCandidate>& candidates,
                                        const Mat& delta_z,
                                        const std::vector<StepState>& states,
                                        const CentroidalParams& params);

}  // namespace mcmpc
