#include "mcmpc/zmp.hpp"

namespace mcmpc {

double zmp_denominator(const CentroidalParams& params, double com_acc_z, double fz) {
    const double d = params.mass * (com_acc_z + params.gravity) - fz;
    if (d <= 0.0)
        throw ModelError("zmp: net upward external force unloads the robot (D <= 0)");
    return d;
}

Vec2 zmp_lipm(const Vec2& com_xy, const Vec2& com_acc_xy, double com_z, double gravity) {
    if (gravity <= 0.0) throw StructuralError("zmp_lipm: gravity must be positive");
    return com_xy - com_z * com_acc_xy / gravity;
}

Vec2 zmp_full(const CentroidalParams& params, const Vec3& com, const Vec3& com_acc,
              const ExternalContact& contact) {
    const double m = params.mass;
    const double g = params.gravity;
    const double d = zmp_denominator(params, com_acc(2), contact.force(2));
    const Vec2 c = com.head<2>();
    const Vec2 cdd = com_acc.head<2>();
    const Vec2 num = m * c * com_acc(2) - m * com(2) * cdd + m * g * c +
                     contact.point(2) * contact.force.head<2>() -
                     contact.point.head<2>() * contact.force(2);
    return num / d;
}

ZmpCoefficients zmp_coefficients(const CentroidalParams& params, double com_z,
                                 double com_acc_z, const ExternalContact& contact) {
    const double m = params.mass;
    const double g = params.gravity;
    const double d = zmp_denominator(params, com_acc_z, contact.force(2));
    ZmpCoefficients c;
    c.a = m * (g + com_acc_z) / d;
    c.b = m * com_z / d;
    c.j = (contact.point(2) * contact.force.head<2>() -
           contact.point.head<2>() * contact.force(2)) /
          d;
    return c;
}

ZmpPreviewOperators build_zmp_preview(const std::vector<ZmpCoefficients>& coeffs_per_step,
                                      const PreviewMatrices& matrices) {
    const Eigen::Index n = matrices.pos_state.rows();
    if (static_cast<Eigen::Index>(coeffs_per_step.size()) != n)
        throw StructuralError("build_zmp_preview: coefficient count does not match horizon");
    Vec a(n), b(n);
    ZmpPreviewOperators ops;
    ops.zmp_offset.resize(n, 2);
    for (Eigen::Index k = 0; k < n; ++k) {
        a(k) = coeffs_per_step[k].a;
        b(k) = coeffs_per_step[k].b;
        ops.zmp_offset.row(k) = coeffs_per_step[k].j.transpose();
    }
    ops.zmp_state = a.asDiagonal() * matrices.pos_state - b.asDiagonal() * matrices.acc_state;
    ops.zmp_input = a.asDiagonal() * matrices.pos_input - b.asDiagonal() * matrices.acc_input;
    return ops;
}

Vec2 delta_zmp(const CentroidalParams& params, const Vec3& com, const Vec3& com_acc,
               const ExternalContact& contact) {
    const double m = params.mass;
    const double g = params.gravity;
    const double d = zmp_denominator(params, com_acc(2), contact.force(2));
    const Vec2 c = com.head<2>();
    const Vec2 cdd = com_acc.head<2>();
    return (contact.point(2) / d) * contact.force.head<2>() +
           ((c - contact.point.head<2>() - com(2) * cdd / g) / d) * contact.force(2) +
           m * com(2) * cdd * com_acc(2) / (g * d);
}

Vec2 force_from_delta(const CentroidalParams& params, const Vec3& com, const Vec3& com_acc,
                      const Vec3& contact_point, const Vec2& delta, double fz) {
    if (contact_point(2) <= 0.0)
        throw ModelError("force_from_delta: contact point height must be positive");
    const double m = params.mass;
    const double g = params.gravity;
    const Vec2 c = com.head<2>();
    const Vec2 cdd = com_acc.head<2>();
    const double pz = contact_point(2);
    return ((contact_point.head<2>() + com(2) * cdd / g - c - delta) / pz) * fz +
           (m * (g + com_acc(2)) * delta - (m * com(2) * cdd / g) * com_acc(2)) / pz;
}

}  // namespace mcmpc
