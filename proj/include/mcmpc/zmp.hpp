#pragma once

#include <vector>

#include "mcmpc/preview.hpp"
#include "mcmpc/types.hpp"

namespace mcmpc {

/// Point-mass centroidal model. Angular momentum rate is assumed zero
/// throughout; it is a model assumption, not a runtime field.
struct CentroidalParams {
    double mass = 30.0;      // [kg]
    double gravity = 9.81;   // [m/s^2], positive, acting along -z
};

/// External (hand/environment) contact: force exerted by the environment
/// on the robot, applied at `point`.
struct ExternalContact {
    Vec3 force = Vec3::Zero();   // [N]
    Vec3 point = Vec3::Zero();   // [m]
};

/// Per-step coefficients of the affine ZMP map
///   zmp = a * com_xy - b * com_acc_xy + j.
struct ZmpCoefficients {
    double a = 1.0;          // dimensionless
    double b = 0.0;          // [s^2]
    Vec2 j = Vec2::Zero();   // [m]
};

/// Stacked horizon ZMP operators (shared across x and y except the offset):
///   Z_axis = zmp_state * state_axis + zmp_input * jerks_axis + zmp_offset.col(axis)
struct ZmpPreviewOperators {
    Mat zmp_state;    // N x 3
    Mat zmp_input;    // N x N, lower triangular
    Mat zmp_offset;   // N x 2
};

/// LIPM ZMP: com_xy - com_z * com_acc_xy / g.
Vec2 zmp_lipm(const Vec2& com_xy, const Vec2& com_acc_xy, double com_z, double gravity);

/// Full centroidal ZMP on the feet plane with an external contact.
/// Requires D = m*(acc_z + g) - f_z > 0 (else the contact unloads the robot).
Vec2 zmp_full(const CentroidalParams& params, const Vec3& com, const Vec3& com_acc,
              const ExternalContact& contact);

ZmpCoefficients zmp_coefficients(const CentroidalParams& params, double com_z,
                                 double com_acc_z, const ExternalContact& contact);

ZmpPreviewOperators build_zmp_preview(const std::vector<ZmpCoefficients>& coeffs_per_step,
                                      const PreviewMatrices& matrices);

/// ZMP shift of the external contact plus the vertical-acceleration cross
/// term: satisfies zmp_full == zmp_lipm + delta_zmp identically.
Vec2 delta_zmp(const CentroidalParams& params, const Vec3& com, const Vec3& com_acc,
               const ExternalContact& contact);

/// Tangential contact force realizing a requested ZMP shift for a given
/// vertical force component; exact inverse of delta_zmp.
Vec2 force_from_delta(const CentroidalParams& params, const Vec3& com, const Vec3& com_acc,
                      const Vec3& contact_point, const Vec2& delta, double fz);

/// D = m*(acc_z + g) - f_z; throws ModelError when non-positive.
double zmp_denominator(const CentroidalParams& params, double com_acc_z, double fz);

}  // namespace mcmpc
