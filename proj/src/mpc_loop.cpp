#include "mcmpc/mpc_loop.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mcmpc {

namespace {

constexpr double kTimeEps = 1e-9;

Vec3 minimum_jerk_velocity(const Vec3& start, const Vec3& goal, double begin, double duration,
                           double t) {
    if (duration <= 0.0) return Vec3::Zero();
    const double tau = std::clamp((t - begin) / duration, 0.0, 1.0);
    const double dsdt = (30.0 * tau * tau - 60.0 * tau * tau * tau + 30.0 * tau * tau * tau * tau) /
                        duration;
    return (goal - start) * dsdt;
}

struct CyclePlan {
    VerticalPlan vertical;
    Stage2Solution s2;
    std::vector<StepState> predicted;  // per-step CoM state at the preview samples
    SupportSchedule schedule;
};

SupportSchedule build_schedule(const Scenario& scenario, double t, const PreviewParams& horizon) {
    SupportSchedule sched;
    sched.zmp_lower.resize(horizon.steps, 2);
    sched.zmp_upper.resize(horizon.steps, 2);
    for (int k = 0; k < horizon.steps; ++k) {
        const SupportPhase phase = scenario.support_at(t + (k + 1) * horizon.dt);
        const Vec2 lo = phase.lower.array() + scenario.zmp_margin;
        const Vec2 up = phase.upper.array() - scenario.zmp_margin;
        if ((up - lo).minCoeff() <= 0.0)
            throw ModelError("support rectangle collapses under the safety margin at t=" +
                             std::to_string(t + (k + 1) * horizon.dt));
        sched.zmp_lower.row(k) = lo.transpose();
        sched.zmp_upper.row(k) = up.transpose();
    }
    return sched;
}

std::vector<ExternalContact> load_schedule(const Scenario& scenario, double t,
                                           const PreviewParams& horizon) {
    std::vector<ExternalContact> contacts(horizon.steps);
    if (!scenario.external_load || scenario.external_load->mass <= 0.0) {
        for (auto& c : contacts) c.point = Vec3(0, 0, 1);
        return contacts;
    }
    const ExternalLoad& load = *scenario.external_load;
    for (int k = 0; k < horizon.steps; ++k) {
        const double tk = t + (k + 1) * horizon.dt;
        if (tk + kTimeEps >= load.attach_time && tk <= load.release_time + kTimeEps) {
            contacts[k].force = Vec3(0, 0, -load.mass * scenario.gravity);
            Vec3 p = Vec3(0, 0, 1);
            // interpolate the carried-load position series
            if (!load.position.empty()) {
                p = load.position.back().value;
                for (std::size_t i = 1; i < load.position.size(); ++i) {
                    if (tk <= load.position[i].time) {
                        const auto& a = load.position[i - 1];
                        const auto& b = load.position[i];
                        const double w = (tk - a.time) / std::max(b.time - a.time, 1e-12);
                        p = a.value + std::clamp(w, 0.0, 1.0) * (b.value - a.value);
                        break;
                    }
                }
                if (tk < load.position.front().time) p = load.position.front().value;
            }
            contacts[k].point = p;
        } else {
            contacts[k].point = Vec3(0, 0, 1);
        }
    }
    return contacts;
}

ExternalContact load_contact_at(const Scenario& scenario, double t) {
    std::vector<ExternalContact> one = load_schedule(scenario, t - scenario.horizon.dt,
                                                     PreviewParams{1, scenario.horizon.dt});
    return one[0];
}

KinematicRefs build_kin_refs(const WorldState& world, const Scenario& scenario,
                             const CycleConfig& config) {
    KinematicRefs refs;
    refs.dt = config.control_dt;
    const double t = world.time;
    const int n = config.horizon.steps;
    for (const auto& hr : scenario.hand_reference) {
        HandTask task;
        task.arm_id = hr.arm;
        task.band = hr.band;
        if (hr.band) {
            task.band_reference.resize(n, 2);
            for (int k = 0; k < n; ++k)
                task.band_reference.row(k) =
                    scenario.hand_reference_at(hr.arm, t + (k + 1) * config.horizon.dt)
                        .head<2>()
                        .transpose();
        }
        const bool reaching = world.contact && world.contact->arm == hr.arm;
        if (reaching && !world.contact->engaged) {
            task.velocity_ref = minimum_jerk_velocity(
                world.contact->reach_start, world.contact->candidate.point,
                world.contact->reach_begin,
                world.contact->engage_time - world.contact->reach_begin, t);
        } else if (reaching) {
            task.velocity_ref.setZero();  // hold the contact
        } else {
            const Vec3 now = scenario.hand_reference_at(hr.arm, t);
            const Vec3 next = scenario.hand_reference_at(hr.arm, t + config.control_dt);
            task.velocity_ref = (next - now) / config.control_dt;
        }
        refs.hands.push_back(std::move(task));
    }
    return refs;
}

int pick_reaching_arm(const WorldState& world, const Scenario& scenario, const Vec3& point) {
    const FkResult fk = forward_kinematics(scenario.robot, world.joints);
    const int num_arms = static_cast<int>(scenario.robot.arms.size());
    // prefer an arm without a horizontal band task, then proximity
    for (const bool require_free : {true, false}) {
        int best = -1;
        double best_dist = kInf;
        for (int arm = 0; arm < num_arms; ++arm) {
            const HandReference* hr = scenario.hand_entry(arm);
            const bool banded = hr != nullptr && hr->band;
            if (require_free && banded) continue;
            const double dist = (fk.hand_positions[arm] - point).norm();
            if (dist < best_dist) {
                best = arm;
                best_dist = dist;
            }
        }
        if (best >= 0) return best;
    }
    return 0;
}

}  // namespace

CycleConfig config_from_scenario(const Scenario& scenario) {
    CycleConfig c;
    c.horizon = scenario.horizon;
    c.control_dt = scenario.horizon.dt;
    c.delta_threshold = scenario.delta_threshold;
    c.reach_duration = scenario.reach_duration;
    return c;
}

WorldState initial_world(const Scenario& scenario) {
    WorldState w;
    w.com_x = {scenario.initial_com(0), 0.0, 0.0};
    w.com_y = {scenario.initial_com(1), 0.0, 0.0};
    w.com_z = {scenario.initial_com(2), 0.0, 0.0};
    w.joints.torso_position = scenario.initial_com - scenario.robot.torso_offset;
    const int nj = scenario.robot.num_arm_joints();
    w.joints.arm_angles =
        scenario.initial_arm_angles.size() == nj ? scenario.initial_arm_angles : Vec::Zero(nj);
    w.joints.arm_velocities = Vec::Zero(nj);
    w.time = 0.0;
    return w;
}

CycleRecord step_cycle(WorldState& world, const Scenario& scenario, const CycleConfig& config,
                       int cycle_index) {
    if (std::abs(config.control_dt - config.horizon.dt) > 1e-12)
        throw StructuralError("mpc_loop: control_dt must equal the preview sample time");
    const double t = world.time;
    const double dt = config.control_dt;
    const int n = config.horizon.steps;
    const CentroidalParams params = scenario.centroidal();
    const auto matrices = preview_matrices_cached(config.horizon);

    // disturbance impulses falling in this cycle
    for (const auto& d : scenario.disturbances) {
        if (d.time >= t - kTimeEps && d.time < t + dt - kTimeEps) {
            world.com_x.velocity += d.velocity_impulse(0);
            world.com_y.velocity += d.velocity_impulse(1);
            world.com_z.velocity += d.velocity_impulse(2);
        }
    }

    // stage 1: vertical plan
    VerticalTask vtask;
    vtask.reference.resize(n);
    for (int k = 0; k < n; ++k)
        vtask.reference(k) = scenario.vertical_reference_at(t + (k + 1) * config.horizon.dt);
    vtask.reach = scenario.robot.reach_z;
    vtask.com_floor = scenario.robot.com_floor;
    vtask.com_ceiling = scenario.robot.com_ceiling;
    vtask.centering = config.centering;

    VerticalPlan vertical;
    try {
        vertical = solve_stage1(vtask, world.com_z, *matrices);
    } catch (const std::exception& e) {
        throw CycleError("stage1", cycle_index, e.what());
    }

    // stage 2
    const std::array<AxisState, 2> state_xy{world.com_x, world.com_y};
    SupportSchedule schedule;
    KinematicRefs refs;
    Stage2Solution s2;
    const bool unknown = scenario.mode == ScenarioMode::unknown_force;
    std::vector<ExternalContact> contact_schedule(n);
    try {
        schedule = build_schedule(scenario, t, config.horizon);
        refs = build_kin_refs(world, scenario, config);
        QpProblem qp;
        if (unknown) {
            for (auto& c : contact_schedule) c.point = Vec3(0, 0, 1);
            qp = build_stage2_unknown(params, vertical, state_xy, schedule, scenario.weights,
                                      refs, scenario.robot, world.joints, *matrices);
        } else {
            contact_schedule = load_schedule(scenario, t, config.horizon);
            qp = build_stage2_known(params, vertical, state_xy, contact_schedule, schedule,
                                    scenario.weights, refs, scenario.robot, world.joints,
                                    *matrices);
        }
        const QpSolution sol = solve_qp(qp);
        if (sol.status != QpStatus::optimal)
            throw ModelError(sol.status == QpStatus::infeasible
                                 ? "whole-body QP infeasible"
                                 : "whole-body QP did not converge");
        s2 = extract_stage2_solution(sol, unknown, params, vertical, state_xy, contact_schedule,
                                     *matrices, scenario.robot.num_vel());
    } catch (const CycleError&) {
        throw;
    } catch (const std::exception& e) {
        throw CycleError("stage2", cycle_index, e.what());
    }

    // predicted CoM states at the preview samples (for stage 3 and force realization)
    std::vector<StepState> predicted(n);
    {
        const Vec px = matrices->pos_state * world.com_x.as_vector() +
                       matrices->pos_input * s2.jerks_xy.col(0);
        const Vec py = matrices->pos_state * world.com_y.as_vector() +
                       matrices->pos_input * s2.jerks_xy.col(1);
        const Vec ax = matrices->acc_state * world.com_x.as_vector() +
                       matrices->acc_input * s2.jerks_xy.col(0);
        const Vec ay = matrices->acc_state * world.com_y.as_vector() +
                       matrices->acc_input * s2.jerks_xy.col(1);
        for (int k = 0; k < n; ++k) {
            predicted[k].com = Vec3(px(k), py(k), vertical.heights(k));
            predicted[k].com_acc = Vec3(ax(k), ay(k), vertical.accelerations(k));
        }
    }

    CycleRecord rec;

    // contact bookkeeping (unknown-force mode)
    if (unknown) {
        const auto need = detect_contact_need(s2.delta_z, config.delta_threshold);
        if (world.contact && world.contact->engaged && !need) {
            // slack horizon is clean again: ramp the force off and release
            rec.events.push_back({t, world.contact->candidate.id, false});
            world.contact.reset();
        } else if (!world.contact && need) {
            const auto candidates = scenario.candidates_available_at(t);
            ContactDecision decision;
            try {
                if (candidates.empty())
                    throw ModelError("contact needed but no candidate is available");
                decision = solve_contact_selection(candidates, s2.delta_z, predicted, params);
            } catch (const std::exception& e) {
                throw CycleError("stage3", cycle_index, e.what());
            }
            ActiveContact ac;
            for (const auto& c : candidates)
                if (c.id == decision.selected) ac.candidate = c;
            ac.engage_time = t + std::min(config.reach_duration, *need * config.horizon.dt);
            ac.reach_begin = t;
            ac.arm = pick_reaching_arm(world, scenario, ac.candidate.point);
            ac.reach_start = forward_kinematics(scenario.robot, world.joints)
                                 .hand_positions[ac.arm];
            world.contact = ac;
        }
        if (world.contact && !world.contact->engaged &&
            t + kTimeEps >= world.contact->engage_time) {
            world.contact->engaged = true;
            rec.events.push_back({world.contact->engage_time, world.contact->candidate.id, true});
        }
        if (world.contact && world.contact->engaged) {
            // realize the first-step slack through the active contact
            try {
                Mat dz0 = s2.delta_z.topRows(1);
                const ContactDecision d = solve_contact_selection(
                    {world.contact->candidate}, dz0, {predicted[0]}, params);
                world.contact->force = Vec3(d.f_xy_trajectory(0, 0), d.f_xy_trajectory(0, 1),
                                            d.fz_trajectory(0));
            } catch (const std::exception& e) {
                throw CycleError("stage3", cycle_index, e.what());
            }
        }
    }

    // apply first-step inputs and propagate
    const Vec3 jerk(s2.jerks_xy(0, 0), s2.jerks_xy(0, 1), vertical.jerks(0));
    world.com_x = propagate_axis(world.com_x, jerk(0), dt);
    world.com_y = propagate_axis(world.com_y, jerk(1), dt);
    world.com_z = propagate_axis(world.com_z, jerk(2), dt);
    const int nj = scenario.robot.num_arm_joints();
    const Vec arm_rates = s2.qdot.tail(nj);
    world.joints.arm_angles += arm_rates * dt;
    world.joints.arm_velocities = arm_rates;
    world.joints.torso_position = world.com_position() - scenario.robot.torso_offset;
    world.time = t + dt;

    // log the post-propagation state with the force transmitted this cycle
    ExternalContact applied;
    applied.point = Vec3(0, 0, 1);
    if (unknown) {
        if (world.contact && world.contact->engaged) {
            applied.force = world.contact->force;
            applied.point = world.contact->candidate.point;
            rec.contact_id = world.contact->candidate.id;
        }
    } else {
        const ExternalContact load = load_contact_at(scenario, world.time);
        if (load.force.norm() > 0.0) {
            applied = load;
            rec.contact_id = "load";
        }
    }

    rec.time = world.time;
    rec.com = world.com_position();
    rec.com_vel = world.com_velocity();
    rec.com_acc = world.com_acceleration();
    rec.jerk = jerk;
    rec.zmp = zmp_full(params, rec.com, rec.com_acc, applied);
    rec.zmp_lower = schedule.zmp_lower.row(0).transpose();
    rec.zmp_upper = schedule.zmp_upper.row(0).transpose();
    rec.delta = delta_zmp(params, rec.com, rec.com_acc, applied);
    rec.force = applied.force;
    rec.contact_point = applied.point;
    rec.arm_angles = world.joints.arm_angles;
    rec.qdot = s2.qdot;
    return rec;
}

void run_scenario_into(const Scenario& scenario, const CycleConfig& config, SimTrace& trace) {
    Scenario resolved = scenario;
    std::mt19937 rng(config.seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (auto& d : resolved.disturbances)
        if (d.jitter > 0.0) d.velocity_impulse *= 1.0 + d.jitter * uni(rng);

    WorldState world = initial_world(resolved);
    const int cycles =
        static_cast<int>(std::llround(resolved.duration / config.control_dt));
    for (int i = 0; i < cycles; ++i) {
        CycleRecord rec = step_cycle(world, resolved, config, i);
        for (const auto& e : rec.events) trace.events.push_back(e);
        rec.events.clear();
        trace.records.push_back(std::move(rec));
    }
}

SimTrace run_scenario(const Scenario& scenario, const CycleConfig& config) {
    SimTrace trace;
    run_scenario_into(scenario, config, trace);
    return trace;
}

VerifyReport verify_trace(const SimTrace& trace, const Scenario& scenario) {
    VerifyReport rep;
    const CentroidalParams params = scenario.centroidal();
    for (const auto& rec : trace.records) {
        ExternalContact contact;
        contact.force = rec.force;
        contact.point = rec.contact_point;

        const Vec2 zmp = zmp_full(params, rec.com, rec.com_acc, contact);
        for (int axis = 0; axis < 2; ++axis) {
            rep.zmp_violation = std::max(rep.zmp_violation, rec.zmp_lower(axis) - zmp(axis));
            rep.zmp_violation = std::max(rep.zmp_violation, zmp(axis) - rec.zmp_upper(axis));
        }

        const Vec2 lipm = zmp_lipm(rec.com.head<2>(), rec.com_acc.head<2>(), rec.com(2),
                                   params.gravity);
        rep.identity_error = std::max(rep.identity_error,
                                      (lipm + rec.delta - zmp).lpNorm<Eigen::Infinity>());

        if (!rec.contact_id.empty() && rec.contact_id != "load") {
            for (const auto& tc : scenario.contact_candidates) {
                if (tc.candidate.id == rec.contact_id) {
                    const auto pyr = FrictionPyramid::from_contact(tc.candidate.normal,
                                                                  tc.candidate.mu);
                    rep.friction_violation = std::max(rep.friction_violation,
                                                      friction_check(pyr, rec.force).violation);
                    break;
                }
            }
        }

        const double vref = scenario.vertical_reference_at(rec.time);
        rep.vertical_band_violation =
            std::max({rep.vertical_band_violation,
                      std::abs(rec.com(2) - vref) - scenario.robot.reach_z,
                      scenario.robot.com_floor - rec.com(2),
                      rec.com(2) - scenario.robot.com_ceiling});

        for (const auto& hr : scenario.hand_reference) {
            if (!hr.band) continue;
            const Vec2 r = scenario.hand_reference_at(hr.arm, rec.time).head<2>();
            rep.horizontal_band_violation =
                std::max(rep.horizontal_band_violation,
                         (r - rec.com.head<2>()).cwiseAbs().maxCoeff() - scenario.robot.reach_xy);
        }

        for (Eigen::Index i = 0; i < rec.arm_angles.size(); ++i) {
            rep.joint_limit_violation =
                std::max({rep.joint_limit_violation,
                          scenario.robot.joint_lower(i) - rec.arm_angles(i),
                          rec.arm_angles(i) - scenario.robot.joint_upper(i)});
        }
    }
    rep.zmp_violation = std::max(rep.zmp_violation, 0.0);
    rep.friction_violation = std::max(rep.friction_violation, 0.0);
    rep.vertical_band_violation = std::max(rep.vertical_band_violation, 0.0);
    rep.horizontal_band_violation = std::max(rep.horizontal_band_violation, 0.0);
    rep.joint_limit_violation = std::max(rep.joint_limit_violation, 0.0);
    return rep;
}

}  // namespace mcmpc
