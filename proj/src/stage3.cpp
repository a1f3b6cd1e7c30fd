#include "mcmpc/stage3.hpp"

#include "mcmpc/qp.hpp"

#include <cmath>
#include <optional>

namespace mcmpc {

namespace {

constexpr double kActiveSlack = 1e-9;   // slack below this fixes fz = 0
constexpr double kUnloadMargin = 0.9;   // cap fz at this fraction of m(g + acc_z)

// affine map f_xy = gain * fz + offset at one step, from the back-substitution
struct TangentialMap {
    Vec2 gain;
    Vec2 offset;
};

TangentialMap tangential_map(const CentroidalParams& params, const StepState& s,
                             const Vec3& point, const Vec2& delta) {
    const double g = params.gravity;
    const Vec2 c = s.com.head<2>();
    const Vec2 cdd = s.com_acc.head<2>();
    TangentialMap m;
    m.gain = (point.head<2>() + s.com(2) * cdd / g - c - delta) / point(2);
    m.offset = (params.mass * (g + s.com_acc(2)) * delta -
                (params.mass * s.com(2) * cdd / g) * s.com_acc(2)) /
               point(2);
    return m;
}

struct CandidateResult {
    Vec fz;        // per active step
    double force_cost = 0.0;
    bool feasible = false;
};

CandidateResult solve_candidate(const ContactCandidate& cand, const Mat& delta_z,
                                const std::vector<StepState>& states,
                                const std::vector<int>& active,
                                const CentroidalParams& params) {
    const FrictionPyramid pyr = FrictionPyramid::from_contact(cand.normal, cand.mu);
    const Eigen::Index na = static_cast<Eigen::Index>(active.size());

    CandidateResult res;
    if (na == 0) {
        res.fz.resize(0);
        res.feasible = true;
        return res;
    }

    QpProblem qp;
    qp.hessian = 2.0 * Mat::Identity(na, na);
    qp.gradient = Vec::Zero(na);
    qp.var_lower = Vec::Zero(na);
    qp.var_upper.resize(na);
    std::vector<Vec> rows;
    std::vector<double> ups;
    for (Eigen::Index a = 0; a < na; ++a) {
        const int k = active[a];
        const StepState& s = states[k];
        qp.var_upper(a) = kUnloadMargin * params.mass * (params.gravity + s.com_acc(2));
        const TangentialMap tm =
            tangential_map(params, s, cand.point, delta_z.row(k).transpose());
        for (int f = 0; f < 4; ++f) {
            // facet . (gain*fz + offset, fz) <= 0
            const double coeff =
                pyr.facets.row(f).head<2>().dot(tm.gain) + pyr.facets(f, 2);
            const double rhs = -pyr.facets.row(f).head<2>().dot(tm.offset);
            Vec row = Vec::Zero(na);
            row(a) = coeff;
            rows.push_back(std::move(row));
            ups.push_back(rhs);
        }
    }
    qp.ineq_matrix.resize(static_cast<Eigen::Index>(rows.size()), na);
    qp.ineq_lower = Vec::Constant(static_cast<Eigen::Index>(rows.size()), -kInf);
    qp.ineq_upper.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        qp.ineq_matrix.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
        qp.ineq_upper(static_cast<Eigen::Index>(i)) = ups[i];
    }

    const QpSolution sol = solve_qp(qp);
    if (sol.status != QpStatus::optimal) return res;
    res.fz = sol.primal;
    res.force_cost = sol.primal.squaredNorm();
    res.feasible = true;
    return res;
}

}  // namespace

void ContactCandidate::validate() const {
    if (std::abs(normal.norm() - 1.0) > 1e-9)
        throw StructuralError("contact candidate '" + id + "': normal must be unit length");
    if (mu <= 0.0) throw StructuralError("contact candidate '" + id + "': mu must be positive");
    if (point(2) <= 0.0)
        throw StructuralError("contact candidate '" + id + "': point height must be positive");
    if (weight < 0.0)
        throw StructuralError("contact candidate '" + id + "': weight must be nonnegative");
}

FrictionPyramid FrictionPyramid::from_contact(const Vec3& normal, double mu) {
    if (std::abs(normal.norm() - 1.0) > 1e-9)
        throw StructuralError("friction pyramid: normal must be unit length");
    if (mu <= 0.0) throw StructuralError("friction pyramid: mu must be positive");
    // orthonormal tangent basis
    Vec3 t1 = normal.cross(std::abs(normal(2)) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX());
    t1.normalize();
    const Vec3 t2 = normal.cross(t1);
    const double bound = mu / std::sqrt(2.0);
    FrictionPyramid p;
    p.facets.resize(4, 3);
    p.facets.row(0) = (t1 - bound * normal).transpose();
    p.facets.row(1) = (-t1 - bound * normal).transpose();
    p.facets.row(2) = (t2 - bound * normal).transpose();
    p.facets.row(3) = (-t2 - bound * normal).transpose();
    return p;
}

FrictionResult friction_check(const FrictionPyramid& pyramid, const Vec3& force) {
    FrictionResult r;
    const Vec residual = pyramid.facets * force;
    r.violation = std::max(0.0, residual.maxCoeff());
    r.feasible = r.violation <= 0.0;
    return r;
}

ContactDecision solve_contact_selection(const std::vector<ContactCandidate>& candidates,
                                        const Mat& delta_z,
                                        const std::vector<StepState>& states,
                                        const CentroidalParams& params) {
    if (candidates.empty())
        throw StructuralError("stage3: candidate list is empty");
    if (static_cast<Eigen::Index>(states.size()) != delta_z.rows() || delta_z.cols() != 2)
        throw StructuralError("stage3: slack trajectory and state count mismatch");
    for (const auto& c : candidates) c.validate();

    std::vector<int> active;
    for (Eigen::Index k = 0; k < delta_z.rows(); ++k)
        if (delta_z.row(k).cwiseAbs().maxCoeff() > kActiveSlack)
            active.push_back(static_cast<int>(k));

    std::optional<std::size_t> best;
    CandidateResult best_res;
    double best_obj = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!candidates[i].reachable) continue;
        CandidateResult res = solve_candidate(candidates[i], delta_z, states, active, params);
        if (!res.feasible) continue;
        const double obj = res.force_cost + candidates[i].weight;
        const bool better =
            !best || obj < best_obj - 1e-12 ||
            (std::abs(obj - best_obj) <= 1e-12 && candidates[i].id < candidates[*best].id);
        if (better) {
            best = i;
            best_res = std::move(res);
            best_obj = obj;
        }
    }
    if (!best)
        throw ModelError("stage3: no reachable candidate admits a feasible force plan");

    const ContactCandidate& cand = candidates[*best];
    ContactDecision dec;
    dec.selected = cand.id;
    dec.objective = best_obj;
    dec.fz_trajectory = Vec::Zero(delta_z.rows());
    for (std::size_t a = 0; a < active.size(); ++a)
        dec.fz_trajectory(active[a]) = best_res.fz(static_cast<Eigen::Index>(a));
    dec.f_xy_trajectory.resize(delta_z.rows(), 2);
    for (Eigen::Index k = 0; k < delta_z.rows(); ++k)
        dec.f_xy_trajectory.row(k) =
            force_from_delta(params, states[k].com, states[k].com_acc, cand.point,
                             delta_z.row(k).transpose(), dec.fz_trajectory(k))
                .transpose();
    return dec;
}

}  // namespace mcmpc
