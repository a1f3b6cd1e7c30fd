#include "mcmpc/qp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <vector>

namespace mcmpc {

namespace {

constexpr double kHessianReg = 1e-9;
constexpr double kSigma = 1e-6;
constexpr double kAlpha = 1.6;
constexpr int kSweepsPerIter = 25;
constexpr double kEpsInfeas = 1e-7;

struct Stacked {
    Mat C;   // all constraint rows: eq, ineq, box
    Vec lo;
    Vec up;
    Eigen::Index me, mi, mb;
};

Stacked stack_constraints(const QpProblem& p) {
    Stacked s;
    s.me = p.num_eq();
    s.mi = p.num_ineq();
    s.mb = p.has_box() ? p.num_vars() : 0;
    const Eigen::Index n = p.num_vars();
    const Eigen::Index m = s.me + s.mi + s.mb;
    s.C.setZero(m, n);
    s.lo.resize(m);
    s.up.resize(m);
    if (s.me > 0) {
        s.C.topRows(s.me) = p.eq_matrix;
        s.lo.head(s.me) = p.eq_rhs;
        s.up.head(s.me) = p.eq_rhs;
    }
    if (s.mi > 0) {
        s.C.middleRows(s.me, s.mi) = p.ineq_matrix;
        s.lo.segment(s.me, s.mi) = p.ineq_lower;
        s.up.segment(s.me, s.mi) = p.ineq_upper;
    }
    if (s.mb > 0) {
        s.C.bottomRows(s.mb).setIdentity();
        s.lo.tail(s.mb) = p.var_lower;
        s.up.tail(s.mb) = p.var_upper;
    }
    return s;
}

double primal_violation(const Stacked& s, const Vec& cx) {
    double v = 0.0;
    for (Eigen::Index i = 0; i < cx.size(); ++i) {
        if (std::isfinite(s.lo(i))) v = std::max(v, s.lo(i) - cx(i));
        if (std::isfinite(s.up(i))) v = std::max(v, cx(i) - s.up(i));
    }
    return v;
}

// Equality-constrained KKT solve on a guessed active set, with one round of
// iterative refinement against the unregularized system.
bool polish(const QpProblem& p, const Stacked& s, const Mat& h_reg, const Vec& z,
            const Vec& y, QpSolution& out) {
    const Eigen::Index n = p.num_vars();
    const Eigen::Index m = s.C.rows();

    std::vector<Eigen::Index> act;
    std::vector<double> act_rhs;
    std::vector<int> act_side;  // -1 lower, +1 upper, 0 equality
    const double y_scale = std::max(1.0, y.size() > 0 ? y.lpNorm<Eigen::Infinity>() : 0.0);
    const double z_scale = std::max(1.0, z.size() > 0 ? z.lpNorm<Eigen::Infinity>() : 0.0);
    for (Eigen::Index i = 0; i < m; ++i) {
        if (i < s.me) {
            act.push_back(i);
            act_rhs.push_back(s.lo(i));
            act_side.push_back(0);
            continue;
        }
        const bool low_near = std::isfinite(s.lo(i)) && z(i) - s.lo(i) <= 1e-7 * z_scale;
        const bool up_near = std::isfinite(s.up(i)) && s.up(i) - z(i) <= 1e-7 * z_scale;
        if (y(i) < -1e-10 * y_scale || (low_near && y(i) <= 0.0)) {
            act.push_back(i);
            act_rhs.push_back(s.lo(i));
            act_side.push_back(-1);
        } else if (y(i) > 1e-10 * y_scale || (up_near && y(i) >= 0.0)) {
            act.push_back(i);
            act_rhs.push_back(s.up(i));
            act_side.push_back(+1);
        }
    }

    const Eigen::Index na = static_cast<Eigen::Index>(act.size());
    Mat kkt = Mat::Zero(n + na, n + na);
    kkt.topLeftCorner(n, n) = h_reg;
    for (Eigen::Index a = 0; a < na; ++a) {
        kkt.block(0, n + a, n, 1) = s.C.row(act[a]).transpose();
        kkt.block(n + a, 0, 1, n) = s.C.row(act[a]);
        kkt(n + a, n + a) = -1e-12;
    }
    Vec rhs(n + na);
    rhs.head(n) = -p.gradient;
    for (Eigen::Index a = 0; a < na; ++a) rhs(n + a) = act_rhs[a];

    Eigen::FullPivLU<Mat> lu(kkt);
    if (!lu.isInvertible()) return false;
    Vec sol = lu.solve(rhs);
    // refinement against the unregularized system without the -delta block
    Mat kkt0 = kkt;
    kkt0.topLeftCorner(n, n) = p.hessian;
    for (Eigen::Index a = 0; a < na; ++a) kkt0(n + a, n + a) = 0.0;
    for (int pass = 0; pass < 2; ++pass) {
        Vec resid = rhs - kkt0 * sol;
        sol += lu.solve(resid);
    }

    out.primal = sol.head(n);
    out.dual_eq = Vec::Zero(s.me);
    out.dual_ineq = Vec::Zero(s.mi + s.mb);
    for (Eigen::Index a = 0; a < na; ++a) {
        const Eigen::Index row = act[a];
        if (act_side[a] == 0)
            out.dual_eq(row) = sol(n + a);
        else
            out.dual_ineq(row - s.me) = sol(n + a);
    }
    return out.primal.allFinite();
}

void finalize(const QpProblem& p, QpSolution& sol) {
    sol.objective = 0.5 * sol.primal.dot(p.hessian * sol.primal) + p.gradient.dot(sol.primal);
}

// Ruiz equilibration of the stacked KKT data plus a cost normalization.
// The solver core runs on the scaled problem; callers unscale the result.
struct Scaling {
    Vec d;      // variable scale, x = d .* x_scaled
    Vec e;      // row scale over [eq; ineq; box]
    double c;   // cost scale
};

Scaling equilibrate(const QpProblem& p, const Stacked& s) {
    const Eigen::Index n = p.num_vars();
    const Eigen::Index m = s.C.rows();
    Scaling sc{Vec::Ones(n), Vec::Ones(m), 1.0};
    Mat h = p.hessian;
    Mat c_mat = s.C;
    for (int iter = 0; iter < 15; ++iter) {
        Vec delta(n), eps(m);
        for (Eigen::Index j = 0; j < n; ++j) {
            double norm = h.col(j).lpNorm<Eigen::Infinity>();
            if (m > 0) norm = std::max(norm, c_mat.col(j).lpNorm<Eigen::Infinity>());
            delta(j) = norm > 1e-12 ? 1.0 / std::sqrt(norm) : 1.0;
        }
        for (Eigen::Index i = 0; i < m; ++i) {
            const double norm = c_mat.row(i).lpNorm<Eigen::Infinity>();
            eps(i) = norm > 1e-12 ? 1.0 / std::sqrt(norm) : 1.0;
        }
        h = delta.asDiagonal() * h * delta.asDiagonal();
        if (m > 0) c_mat = eps.asDiagonal() * c_mat * delta.asDiagonal();
        sc.d = sc.d.cwiseProduct(delta);
        sc.e = sc.e.cwiseProduct(eps);
    }
    double h_norm = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) h_norm += h.col(j).lpNorm<Eigen::Infinity>();
    if (n > 0) h_norm /= static_cast<double>(n);
    const double g_norm = sc.d.cwiseProduct(p.gradient).lpNorm<Eigen::Infinity>();
    sc.c = 1.0 / std::max({1e-6, h_norm, g_norm});
    return sc;
}

QpSolution solve_core(const QpProblem& problem, const QpConfig& config);

}  // namespace

void QpProblem::validate() const {
    const Eigen::Index n = num_vars();
    if (hessian.rows() != n || hessian.cols() != n)
        throw StructuralError("qp: hessian/gradient dimension mismatch");
    if (eq_matrix.rows() != num_eq() || (num_eq() > 0 && eq_matrix.cols() != n))
        throw StructuralError("qp: equality constraint dimension mismatch");
    if (ineq_matrix.rows() != num_ineq() || ineq_upper.size() != num_ineq() ||
        (num_ineq() > 0 && ineq_matrix.cols() != n))
        throw StructuralError("qp: inequality constraint dimension mismatch");
    if (has_box() && (var_lower.size() != n || var_upper.size() != n))
        throw StructuralError("qp: box bound dimension mismatch");

    const double h_scale = std::max(1.0, hessian.size() > 0 ? hessian.cwiseAbs().maxCoeff() : 0.0);
    if (((hessian - hessian.transpose()).cwiseAbs().maxCoeff()) > 1e-12 * h_scale)
        throw ModelError("qp: hessian is not symmetric");
    Mat h_reg = hessian;
    h_reg.diagonal().array() += kHessianReg;
    Eigen::SelfAdjointEigenSolver<Mat> es(h_reg, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-9)
        throw ModelError("qp: hessian is not positive semidefinite");
}

QpSolution solve_qp(const QpProblem& problem, double tol, int max_iter) {
    QpConfig cfg;
    cfg.tol = tol;
    cfg.max_iter = max_iter;
    return solve_qp(problem, cfg);
}

namespace {

QpSolution solve_core(const QpProblem& problem, const QpConfig& config) {
    const Eigen::Index n = problem.num_vars();
    Mat h_reg = problem.hessian;
    h_reg.diagonal().array() += kHessianReg;

    QpSolution sol;
    const Stacked s = stack_constraints(problem);
    const Eigen::Index m = s.C.rows();

    if (m == 0) {
        sol.primal = Eigen::LDLT<Mat>(h_reg).solve(-problem.gradient);
        sol.dual_eq.resize(0);
        sol.dual_ineq.resize(0);
        sol.status = kkt_residual(problem, sol) <= config.tol ? QpStatus::optimal
                                                             : QpStatus::max_iter;
        finalize(problem, sol);
        return sol;
    }

    // per-row ADMM penalties; equality rows get a stiffer weight
    double rho_bar = 0.1;
    Vec rho(m);
    auto set_rho = [&]() {
        for (Eigen::Index i = 0; i < m; ++i) {
            const bool is_eq = std::isfinite(s.lo(i)) && std::isfinite(s.up(i)) &&
                               s.up(i) - s.lo(i) < 1e-14;
            const bool loose = !std::isfinite(s.lo(i)) && !std::isfinite(s.up(i));
            rho(i) = is_eq ? 1e3 * rho_bar : (loose ? 1e-6 : rho_bar);
        }
    };
    set_rho();

    Vec x = config.initial_point.size() == n ? config.initial_point : Vec::Zero(n);
    Vec z = s.C * x;
    for (Eigen::Index i = 0; i < m; ++i) z(i) = std::clamp(z(i), s.lo(i), s.up(i));
    Vec y = Vec::Zero(m);

    Eigen::LDLT<Mat> kkt_fac(h_reg + kSigma * Mat::Identity(n, n) +
                             s.C.transpose() * rho.asDiagonal() * s.C);

    QpStatus status = QpStatus::max_iter;
    const double loose_eps = std::max(1e-10, 1e-2 * config.tol);
    bool converged = false;

    for (int iter = 0; iter < config.max_iter && !converged; ++iter) {
        Vec dy_last = Vec::Zero(m);
        Vec dx_last = Vec::Zero(n);
        for (int sweep = 0; sweep < kSweepsPerIter; ++sweep) {
            const Vec x_prev = x;
            const Vec y_prev = y;
            Vec rhs = kSigma * x - problem.gradient +
                      s.C.transpose() * (rho.cwiseProduct(z) - y);
            Vec x_tilde = kkt_fac.solve(rhs);
            Vec z_tilde = s.C * x_tilde;
            x = kAlpha * x_tilde + (1.0 - kAlpha) * x;
            Vec z_new = kAlpha * z_tilde + (1.0 - kAlpha) * z + y.cwiseQuotient(rho);
            for (Eigen::Index i = 0; i < m; ++i)
                z_new(i) = std::clamp(z_new(i), s.lo(i), s.up(i));
            y += rho.cwiseProduct(kAlpha * z_tilde + (1.0 - kAlpha) * z - z_new);
            z = z_new;
            dy_last = y - y_prev;
            dx_last = x - x_prev;
        }

        const Vec cx = s.C * x;
        const double r_prim = (cx - z).lpNorm<Eigen::Infinity>();
        const double r_dual =
            (problem.hessian * x + problem.gradient + s.C.transpose() * y)
                .lpNorm<Eigen::Infinity>();
        if (r_prim <= loose_eps && r_dual <= loose_eps) {
            converged = true;
            break;
        }

        // primal infeasibility certificate (OSQP-style) from the dual update
        const double dy_norm = dy_last.lpNorm<Eigen::Infinity>();
        if (dy_norm > 1e-12) {
            const Vec dyn = dy_last / dy_norm;
            bool cert = (s.C.transpose() * dyn).lpNorm<Eigen::Infinity>() <= kEpsInfeas;
            double gap = 0.0;
            for (Eigen::Index i = 0; i < m && cert; ++i) {
                const double pos = std::max(dyn(i), 0.0);
                const double neg = std::min(dyn(i), 0.0);
                if (pos > kEpsInfeas && !std::isfinite(s.up(i))) cert = false;
                if (-neg > kEpsInfeas && !std::isfinite(s.lo(i))) cert = false;
                if (cert)
                    gap += (std::isfinite(s.up(i)) ? s.up(i) * pos : 0.0) +
                           (std::isfinite(s.lo(i)) ? s.lo(i) * neg : 0.0);
            }
            if (cert && gap < -kEpsInfeas) {
                status = QpStatus::infeasible;
                break;
            }
        }

        // adaptive penalty
        const double num = r_prim / std::max(1e-12, std::max(cx.lpNorm<Eigen::Infinity>(),
                                                             z.lpNorm<Eigen::Infinity>()));
        const double den =
            r_dual / std::max(1e-12, (problem.hessian * x).lpNorm<Eigen::Infinity>() +
                                         problem.gradient.lpNorm<Eigen::Infinity>() +
                                         (s.C.transpose() * y).lpNorm<Eigen::Infinity>());
        const double ratio = std::sqrt(num / std::max(den, 1e-12));
        if (ratio > 5.0 || ratio < 0.2) {
            rho_bar = std::clamp(rho_bar * ratio, 1e-6, 1e6);
            set_rho();
            kkt_fac.compute(h_reg + kSigma * Mat::Identity(n, n) +
                            s.C.transpose() * rho.asDiagonal() * s.C);
        }
        (void)dx_last;
    }

    if (status == QpStatus::infeasible) {
        sol.primal = x;
        sol.dual_eq = y.head(s.me);
        sol.dual_ineq = y.tail(s.mi + s.mb);
        sol.status = status;
        finalize(problem, sol);
        return sol;
    }

    sol.primal = x;
    sol.dual_eq = y.head(s.me);
    sol.dual_ineq = y.tail(s.mi + s.mb);
    double best_res = kkt_residual(problem, sol);

    QpSolution polished;
    if (polish(problem, s, h_reg, z, y, polished)) {
        const double res = kkt_residual(problem, polished);
        if (res < best_res) {
            sol = polished;
            best_res = res;
        }
    }

    if (best_res <= config.tol) {
        sol.status = QpStatus::optimal;
    } else if (primal_violation(s, s.C * sol.primal) > config.tol && !converged) {
        sol.status = QpStatus::infeasible;
    } else {
        sol.status = QpStatus::max_iter;
    }
    finalize(problem, sol);
    return sol;
}

}  // namespace

QpSolution solve_qp(const QpProblem& problem, const QpConfig& config) {
    problem.validate();
    if (config.tol <= 0.0) throw StructuralError("qp: tol must be positive");

    const Eigen::Index n = problem.num_vars();
    const Stacked s = stack_constraints(problem);
    const Scaling sc = equilibrate(problem, s);
    const Eigen::Index me = s.me;
    const Eigen::Index mg = s.mi + s.mb;  // general rows: ineq first, then box

    QpProblem scaled;
    scaled.hessian = sc.c * sc.d.asDiagonal() * problem.hessian * sc.d.asDiagonal();
    scaled.hessian = 0.5 * (scaled.hessian + scaled.hessian.transpose());
    scaled.gradient = sc.c * sc.d.cwiseProduct(problem.gradient);
    if (me > 0) {
        scaled.eq_matrix =
            sc.e.head(me).asDiagonal() * problem.eq_matrix * sc.d.asDiagonal();
        scaled.eq_rhs = sc.e.head(me).cwiseProduct(problem.eq_rhs);
    }
    if (mg > 0) {
        // box rows become general rows in the scaled problem so their
        // coefficients can absorb the variable scaling
        scaled.ineq_matrix =
            sc.e.tail(mg).asDiagonal() * s.C.bottomRows(mg) * sc.d.asDiagonal();
        scaled.ineq_lower = sc.e.tail(mg).cwiseProduct(s.lo.tail(mg));
        scaled.ineq_upper = sc.e.tail(mg).cwiseProduct(s.up.tail(mg));
    }

    QpConfig core_cfg = config;
    if (config.initial_point.size() == n)
        core_cfg.initial_point = config.initial_point.cwiseQuotient(sc.d);
    const QpSolution core = solve_core(scaled, core_cfg);

    QpSolution sol;
    sol.primal = sc.d.cwiseProduct(core.primal);
    sol.dual_eq = sc.e.head(me).cwiseProduct(core.dual_eq) / sc.c;
    sol.dual_ineq = sc.e.tail(mg).cwiseProduct(core.dual_ineq) / sc.c;
    sol.status = core.status;

    if (core.status != QpStatus::infeasible) {
        double best_res = kkt_residual(problem, sol);
        Mat h_reg = problem.hessian;
        h_reg.diagonal().array() += kHessianReg;
        Vec z = s.C * sol.primal;
        for (Eigen::Index i = 0; i < z.size(); ++i)
            z(i) = std::clamp(z(i), s.lo(i), s.up(i));
        Vec y(me + mg);
        y.head(me) = sol.dual_eq;
        y.tail(mg) = sol.dual_ineq;
        QpSolution polished;
        if (polish(problem, s, h_reg, z, y, polished)) {
            const double res = kkt_residual(problem, polished);
            if (res < best_res) {
                sol = polished;
                best_res = res;
            }
        }
        sol.status = best_res <= config.tol ? QpStatus::optimal : QpStatus::max_iter;
    }
    finalize(problem, sol);
    return sol;
}

double kkt_residual(const QpProblem& problem, const QpSolution& solution) {
    const Eigen::Index n = problem.num_vars();
    if (solution.primal.size() != n)
        throw StructuralError("kkt_residual: primal dimension mismatch");
    const Stacked s = stack_constraints(problem);
    if (solution.dual_eq.size() != s.me || solution.dual_ineq.size() != s.mi + s.mb)
        throw StructuralError("kkt_residual: dual dimension mismatch");

    const Vec& x = solution.primal;
    Vec mu(s.mi + s.mb);
    mu = solution.dual_ineq;

    Vec stat = problem.hessian * x + problem.gradient;
    if (s.me > 0) stat += problem.eq_matrix.transpose() * solution.dual_eq;
    if (s.mi + s.mb > 0) stat += s.C.bottomRows(s.mi + s.mb).transpose() * mu;
    double res = stat.lpNorm<Eigen::Infinity>();

    const Vec cx = s.C * x;
    res = std::max(res, primal_violation(s, cx));
    if (s.me > 0)
        res = std::max(res, (cx.head(s.me) - s.lo.head(s.me)).lpNorm<Eigen::Infinity>());

    for (Eigen::Index i = 0; i < s.mi + s.mb; ++i) {
        const Eigen::Index row = s.me + i;
        const double up = s.up(row), lo = s.lo(row);
        const double pos = std::max(mu(i), 0.0);
        const double neg = std::min(mu(i), 0.0);
        // dual feasibility against one-sided rows
        if (!std::isfinite(up)) res = std::max(res, pos);
        if (!std::isfinite(lo)) res = std::max(res, -neg);
        // complementarity
        if (std::isfinite(up)) res = std::max(res, std::abs(pos * (up - cx(row))));
        if (std::isfinite(lo)) res = std::max(res, std::abs(neg * (cx(row) - lo)));
    }
    return res;
}

}  // namespace mcmpc
