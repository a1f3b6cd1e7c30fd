// End-to-end acceptance harness: one pass/fail line per criterion, exit 0
// only when every criterion holds. Usage: acceptance <scenario_dir> [planner].

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mcmpc/mpc_loop.hpp"
#include "mcmpc/trace_io.hpp"
#include "test_oracles.hpp"

using namespace mcmpc;

namespace {

std::string g_scenario_dir;
std::string g_planner_path;
int g_failures = 0;

void report(int index, const std::string& name, bool pass, const std::string& detail) {
    std::printf("%s  %2d. %s%s%s\n", pass ? "PASS" : "FAIL", index, name.c_str(),
                detail.empty() ? "" : " -- ", detail.c_str());
    if (!pass) ++g_failures;
}

Scenario load(const std::string& name) {
    return parse_scenario(g_scenario_dir + "/" + name + ".json");
}

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

// ---- criterion 1: pendulum reduction of the full model ---------------------

void criterion_reduction() {
    std::mt19937 rng(101);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const CentroidalParams params{30.0, 9.81};
    double worst = 0.0;
    const double t0 = now_seconds();
    for (int i = 0; i < 10000; ++i) {
        const Vec3 com(uni(rng), uni(rng), 0.5 + 0.5 * std::abs(uni(rng)));
        const Vec3 acc(2.0 * uni(rng), 2.0 * uni(rng), 0.0);
        ExternalContact none;
        none.point = Vec3(0, 0, 1);
        const Vec2 full = zmp_full(params, com, acc, none);
        const Vec2 lipm = zmp_lipm(com.head<2>(), acc.head<2>(), com(2), params.gravity);
        worst = std::max(worst, (full - lipm).lpNorm<Eigen::Infinity>());
    }
    const double elapsed = now_seconds() - t0;
    report(1, "force-free flat-height zmp equals the pendulum zmp",
           worst <= 1e-12 && elapsed < 1.0,
           "max err " + fmt(worst) + ", " + fmt(elapsed) + " s");
}

// ---- criterion 2: shift decomposition is exact -----------------------------

void criterion_decomposition() {
    std::mt19937 rng(102);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const CentroidalParams params{30.0, 9.81};
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const Vec3 com(uni(rng), uni(rng), 0.5 + 0.5 * std::abs(uni(rng)));
        const Vec3 acc(2.0 * uni(rng), 2.0 * uni(rng), uni(rng));
        ExternalContact c;
        c.point = Vec3(uni(rng), uni(rng), 0.5 + 0.5 * std::abs(uni(rng)));
        c.force = Vec3(20.0 * uni(rng), 20.0 * uni(rng), 40.0 * uni(rng));
        const double d = params.mass * (acc(2) + params.gravity) - c.force(2);
        if (d <= 1.0) c.force(2) -= (1.0 - d) + 1.0;
        const Vec2 full = zmp_full(params, com, acc, c);
        const Vec2 lipm = zmp_lipm(com.head<2>(), acc.head<2>(), com(2), params.gravity);
        const Vec2 delta = delta_zmp(params, com, acc, c);
        worst = std::max(worst, (lipm + delta - full).lpNorm<Eigen::Infinity>());
    }
    report(2, "zmp shift decomposition closes to the full model", worst <= 1e-10,
           "max err " + fmt(worst));
}

// ---- criterion 3: tangential force back-substitution round trip ------------

void criterion_roundtrip() {
    std::mt19937 rng(103);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const CentroidalParams params{30.0, 9.81};
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const Vec3 com(uni(rng), uni(rng), 0.5 + 0.5 * std::abs(uni(rng)));
        const Vec3 acc(2.0 * uni(rng), 2.0 * uni(rng), uni(rng));
        const Vec3 point(uni(rng), uni(rng), 0.5 + 0.5 * std::abs(uni(rng)));
        const Vec2 delta(0.2 * uni(rng), 0.2 * uni(rng));
        const double fz =
            0.5 * params.mass * (params.gravity + acc(2)) * std::abs(uni(rng));
        const Vec2 fxy = force_from_delta(params, com, acc, point, delta, fz);
        ExternalContact c;
        c.force = Vec3(fxy(0), fxy(1), fz);
        c.point = point;
        const Vec2 back = delta_zmp(params, com, acc, c);
        worst = std::max(worst, (back - delta).lpNorm<Eigen::Infinity>());
    }
    report(3, "force back-substitution reproduces the requested shift", worst <= 1e-10,
           "max err " + fmt(worst));
}

// ---- criterion 4: stacked preview vs iterated propagation ------------------

void criterion_preview() {
    std::mt19937 rng(104);
    std::uniform_real_distribution<double> uni(-2.0, 2.0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = std::uniform_int_distribution<int>(1, 50)(rng);
        const double dt = std::uniform_real_distribution<double>(0.005, 0.3)(rng);
        const PreviewMatrices m = build_preview_matrices({n, dt});
        const AxisState s0{uni(rng), uni(rng), uni(rng)};
        const Vec jerks = Vec::NullaryExpr(n, [&](Eigen::Index) { return uni(rng); });
        const Vec pos = m.pos_state * s0.as_vector() + m.pos_input * jerks;
        const Vec vel = m.vel_state * s0.as_vector() + m.vel_input * jerks;
        const Vec acc = m.acc_state * s0.as_vector() + m.acc_input * jerks;
        AxisState s = s0;
        for (int k = 0; k < n; ++k) {
            s = propagate_axis(s, jerks(k), dt);
            worst = std::max({worst, std::abs(pos(k) - s.position),
                              std::abs(vel(k) - s.velocity),
                              std::abs(acc(k) - s.acceleration)});
        }
    }
    report(4, "stacked preview operators equal iterated propagation", worst <= 1e-10,
           "max err " + fmt(worst));
}

// ---- criterion 5: qp solver vs exhaustive active-set reference -------------

void criterion_qp() {
    std::mt19937 rng(105);
    double worst_gap = 0.0, worst_kkt = 0.0;
    bool ok = true;
    for (int trial = 0; trial < 200; ++trial) {
        const QpProblem p = testing::random_qp(rng, 20, 10);
        const QpSolution sol = solve_qp(p);
        if (sol.status != QpStatus::optimal) {
            ok = false;
            break;
        }
        worst_kkt = std::max(worst_kkt, kkt_residual(p, sol));
        const testing::OracleResult oracle = testing::active_set_oracle(p);
        if (!oracle.feasible) {
            ok = false;
            break;
        }
        const double gap = std::abs(sol.objective - oracle.objective) /
                           std::max(1.0, std::abs(oracle.objective));
        worst_gap = std::max(worst_gap, gap);
    }
    report(5, "qp solutions match the exhaustive active-set reference",
           ok && worst_gap <= 1e-6 && worst_kkt <= 1e-8,
           "max gap " + fmt(worst_gap) + ", max kkt " + fmt(worst_kkt));
}

// ---- criterion 6: analytic jacobians vs central differences ----------------

void criterion_jacobians() {
    const RobotModel model = RobotModel::default_model();
    std::mt19937 rng(106);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const double h = 1e-7;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        JointState s;
        s.torso_position = Vec3(uni(rng), uni(rng), 0.8 + 0.2 * uni(rng));
        const int nj = model.num_arm_joints();
        s.arm_angles = Vec(nj);
        for (int i = 0; i < nj; ++i)
            s.arm_angles(i) = std::uniform_real_distribution<double>(
                model.joint_lower(i) + 0.1, model.joint_upper(i) - 0.1)(rng);
        s.arm_velocities = Vec::Zero(nj);
        for (int arm = 0; arm < 2; ++arm) {
            const Mat jac = hand_jacobian(model, s, arm);
            for (int col = 0; col < model.num_vel(); ++col) {
                JointState lo = s, hi = s;
                if (col < 3) {
                    lo.torso_position(col) -= h;
                    hi.torso_position(col) += h;
                } else {
                    lo.arm_angles(col - 3) -= h;
                    hi.arm_angles(col - 3) += h;
                }
                const Vec3 fd = (forward_kinematics(model, hi).hand_positions[arm] -
                                 forward_kinematics(model, lo).hand_positions[arm]) /
                                (2.0 * h);
                worst = std::max(worst, (jac.col(col) - fd).lpNorm<Eigen::Infinity>());
            }
        }
    }
    report(6, "hand jacobians match central finite differences", worst <= 1e-6,
           "max err " + fmt(worst));
}

// ---- criterion 7: contact selection vs one-hot enumeration reference -------

void criterion_contact_selection() {
    std::mt19937 rng(107);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const CentroidalParams params{30.0, 9.81};
    bool ok = true;
    double worst_obj = 0.0, worst_fz = 0.0;
    int feasible_count = 0;
    for (int trial = 0; trial < 100 && ok; ++trial) {
        const int n = std::uniform_int_distribution<int>(1, 10)(rng);
        std::vector<StepState> states(n);
        for (auto& s : states) {
            s.com = Vec3(0.1 * uni(rng), 0.1 * uni(rng), 0.75 + 0.1 * uni(rng));
            s.com_acc = Vec3(0.5 * uni(rng), 0.5 * uni(rng), 0.2 * uni(rng));
        }
        Mat delta = Mat::Zero(n, 2);
        for (int k = 0; k < n; ++k)
            if (uni(rng) > -0.5) {
                delta(k, 0) = 0.03 * uni(rng);
                delta(k, 1) = 0.03 * uni(rng);
            }
        const int nc = std::uniform_int_distribution<int>(1, 6)(rng);
        std::vector<ContactCandidate> cands;
        for (int i = 0; i < nc; ++i) {
            ContactCandidate c;
            c.id = "c" + std::to_string(i);
            c.point = Vec3(0.6 * uni(rng), 0.6 * uni(rng), 0.6 + 0.4 * std::abs(uni(rng)));
            c.mu = 0.2 + 0.6 * std::abs(uni(rng));
            c.weight = 0.2 * std::abs(uni(rng));
            c.reachable = uni(rng) > -0.8;
            cands.push_back(c);
        }
        const testing::ContactRef ref =
            testing::reference_contact_selection(cands, delta, states, params);
        if (!ref.found) {
            try {
                solve_contact_selection(cands, delta, states, params);
                ok = false;  // must agree that nothing is feasible
            } catch (const ModelError&) {
            }
            continue;
        }
        ContactDecision dec;
        try {
            dec = solve_contact_selection(cands, delta, states, params);
        } catch (const std::exception&) {
            ok = false;
            break;
        }
        if (dec.selected != ref.id) ok = false;
        worst_obj = std::max(worst_obj, std::abs(dec.objective - ref.objective));
        worst_fz =
            std::max(worst_fz, (dec.fz_trajectory - ref.fz).lpNorm<Eigen::Infinity>());
        ++feasible_count;
    }
    report(7, "contact selection equals the one-hot enumeration reference",
           ok && worst_obj <= 1e-9 && feasible_count >= 30,
           "max obj err " + fmt(worst_obj) + ", max fz err " + fmt(worst_fz) + ", " +
               std::to_string(feasible_count) + " feasible instances");
}

// ---- criterion 8: vertical band containment and crouch-lift shape ----------

void criterion_vertical_band() {
    const Scenario s = load("box_lift");
    const SimTrace trace = run_scenario(s, config_from_scenario(s));
    bool contained = true;
    double z_min = 1e9, z_min_t = 0.0;
    for (const auto& r : trace.records) {
        const double ref = s.vertical_reference_at(r.time);
        const double lb = std::max(ref - s.robot.reach_z, s.robot.com_floor);
        const double ub = std::min(ref + s.robot.reach_z, s.robot.com_ceiling);
        if (r.com(2) < lb - 1e-6 || r.com(2) > ub + 1e-6) contained = false;
        if (r.com(2) < z_min) {
            z_min = r.com(2);
            z_min_t = r.time;
        }
    }
    const double z_first = trace.records.front().com(2);
    const double z_last = trace.records.back().com(2);
    const double t_last = trace.records.back().time;
    // crouch-and-lift: clear descent, low point in the middle, clear recovery
    const bool shape = (z_first - z_min > 0.1) && (z_last - z_min > 0.1) &&
                       z_min_t > 0.2 * t_last && z_min_t < 0.8 * t_last;
    report(8, "box-lift height stays in the admissible band with a crouch-lift profile",
           contained && shape,
           "z " + fmt(z_first) + " -> " + fmt(z_min) + " -> " + fmt(z_last));
}

// ---- criterion 9: reach scenario needs and fires exactly one contact -------

void criterion_reach_firing() {
    const Scenario s = load("reach_object");
    const SimTrace trace = run_scenario(s, config_from_scenario(s));
    int engages = 0;
    for (const auto& e : trace.events)
        if (e.engaged) ++engages;
    const VerifyReport rep = verify_trace(trace, s);

    // rebuild the whole-body problem at the most slack-hungry logged state,
    // without the slack block: it must be infeasible there
    const CycleRecord* worst = nullptr;
    for (const auto& r : trace.records)
        if (!worst || r.delta.norm() > worst->delta.norm()) worst = &r;
    bool slack_free_infeasible = false;
    if (worst && worst->delta.norm() > 1e-4) {
        const auto matrices = preview_matrices_cached(s.horizon);
        const int n = s.horizon.steps;
        const double dt = s.horizon.dt;
        VerticalPlan plan;
        plan.heights = Vec::Constant(n, worst->com(2));
        plan.velocities = Vec::Zero(n);
        plan.accelerations = Vec::Zero(n);
        plan.jerks = Vec::Zero(n);
        std::array<AxisState, 2> state_xy{
            AxisState{worst->com(0), worst->com_vel(0), worst->com_acc(0)},
            AxisState{worst->com(1), worst->com_vel(1), worst->com_acc(1)}};
        SupportSchedule sched;
        sched.zmp_lower.resize(n, 2);
        sched.zmp_upper.resize(n, 2);
        for (int k = 0; k < n; ++k) {
            const SupportPhase phase = s.support_at(worst->time + (k + 1) * dt);
            sched.zmp_lower.row(k) =
                (phase.lower.array() + s.zmp_margin).transpose();
            sched.zmp_upper.row(k) =
                (phase.upper.array() - s.zmp_margin).transpose();
        }
        KinematicRefs refs;
        refs.dt = dt;
        for (const auto& hand : s.hand_reference) {
            if (!hand.band) continue;
            HandTask task;
            task.arm_id = hand.arm;
            task.band = true;
            task.band_reference.resize(n, 2);
            for (int k = 0; k < n; ++k)
                task.band_reference.row(k) =
                    s.hand_reference_at(hand.arm, worst->time + (k + 1) * dt)
                        .head<2>()
                        .transpose();
            refs.hands.push_back(task);
        }
        JointState joints;
        joints.torso_position = worst->com - s.robot.torso_offset;
        joints.arm_angles = worst->arm_angles;
        joints.arm_velocities = Vec::Zero(s.robot.num_arm_joints());
        std::vector<ExternalContact> none(n);
        for (auto& c : none) c.point = Vec3(0, 0, 1);
        const QpProblem qp =
            build_stage2_known(s.centroidal(), plan, state_xy, none, sched, s.weights,
                               refs, s.robot, joints, *matrices);
        slack_free_infeasible = solve_qp(qp).status == QpStatus::infeasible;
    }

    report(9,
           "reach target is unreachable without a contact and fires selection once",
           slack_free_infeasible && engages == 1 && rep.zmp_violation <= 1e-6 &&
               rep.friction_violation <= 1e-9 && rep.pass(),
           std::to_string(engages) + " engagement(s), zmp " + fmt(rep.zmp_violation) +
               ", friction " + fmt(rep.friction_violation));
}

// ---- criterion 10: traversal uses multiple contacts in causal order --------

void criterion_traversal() {
    const Scenario s = load("hole_traversal");
    const SimTrace trace = run_scenario(s, config_from_scenario(s));
    bool causal = true;
    double last_t = -1.0;
    bool engaged = false;
    int engages = 0;
    for (const auto& e : trace.events) {
        if (e.time < last_t) causal = false;
        if (e.engaged == engaged) causal = false;  // engage/release alternate
        engaged = e.engaged;
        last_t = e.time;
        if (e.engaged) ++engages;
    }
    const VerifyReport rep = verify_trace(trace, s);
    report(10, "hole traversal engages and releases contacts in causal order",
           causal && engages >= 2 && trace.events.size() >= 2 && rep.pass(),
           std::to_string(trace.events.size()) + " events, " + std::to_string(engages) +
               " engagements");
}

// ---- criterion 11: determinism and quiet-standing stationarity -------------

void criterion_determinism() {
    bool identical = true;
    for (const char* name : {"quiet_standing", "reach_object", "wide_step",
                             "hole_traversal", "box_lift"}) {
        const Scenario s = load(name);
        const CycleConfig cfg = config_from_scenario(s);
        if (trace_csv(run_scenario(s, cfg)) != trace_csv(run_scenario(s, cfg)))
            identical = false;
    }
    const Scenario quiet = load("quiet_standing");
    const SimTrace trace = run_scenario(quiet, config_from_scenario(quiet));
    double worst_input = 0.0;
    for (const auto& r : trace.records)
        worst_input = std::max({worst_input, r.jerk.lpNorm<Eigen::Infinity>(),
                                r.qdot.lpNorm<Eigen::Infinity>()});
    report(11, "reruns are byte-identical and quiet standing stays stationary",
           identical && worst_input <= 1e-6, "max standing input " + fmt(worst_input));
}

// ---- criterion 12: control cycle runtime -----------------------------------

void criterion_runtime() {
    const Scenario s = load("reach_object");
    const CycleConfig cfg = config_from_scenario(s);
    WorldState world = initial_world(s);
    const int cycles = static_cast<int>(std::lround(s.duration / cfg.control_dt));
    double worst = 0.0;
    for (int k = 0; k < cycles; ++k) {
        const double t0 = now_seconds();
        step_cycle(world, s, cfg, k);
        worst = std::max(worst, now_seconds() - t0);
    }
    report(12, "a full three-stage control cycle finishes within 50 ms",
           worst < 0.05, "worst cycle " + fmt(worst * 1e3) + " ms");
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: acceptance <scenario_dir> [planner]\n");
        return 2;
    }
    g_scenario_dir = argv[1];
    if (argc > 2) g_planner_path = argv[2];

    try {
        criterion_reduction();
        criterion_decomposition();
        criterion_roundtrip();
        criterion_preview();
        criterion_qp();
        criterion_jacobians();
        criterion_contact_selection();
        criterion_vertical_band();
        criterion_reach_firing();
        criterion_traversal();
        criterion_determinism();
        criterion_runtime();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "acceptance harness error: %s\n", e.what());
        return 2;
    }
    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
