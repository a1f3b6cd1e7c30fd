#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mcmpc/scenario.hpp"
#include "mcmpc/stage1.hpp"
#include "mcmpc/stage2.hpp"
#include "mcmpc/stage3.hpp"

namespace mcmpc {

struct CycleConfig {
    PreviewParams horizon;
    double control_dt = 0.1;       // replan period, = horizon.dt by default
    double delta_threshold = 1e-3; // [m]
    double reach_duration = 0.3;   // [s]
    bool centering = false;        // stage-1 midpoint objective
    unsigned seed = 0;             // disturbance jitter only
};

CycleConfig config_from_scenario(const Scenario& scenario);

/// A planning stage failed mid-run; carries the stage name and cycle index.
struct CycleError : std::runtime_error {
    CycleError(const std::string& stage_, int cycle_, const std::string& what_)
        : std::runtime_error("cycle " + std::to_string(cycle_) + ", " + stage_ + ": " + what_),
          stage(stage_),
          cycle(cycle_) {}
    std::string stage;
    int cycle;
};

struct ActiveContact {
    ContactCandidate candidate;
    double engage_time = 0.0;
    bool engaged = false;
    Vec3 reach_start = Vec3::Zero();  // hand position when the reach began
    double reach_begin = 0.0;
    int arm = 0;
    Vec3 force = Vec3::Zero();  // force applied during the current cycle
};

struct WorldState {
    AxisState com_x, com_y, com_z;
    JointState joints;
    std::optional<ActiveContact> contact;
    double time = 0.0;

    Vec3 com_position() const { return {com_x.position, com_y.position, com_z.position}; }
    Vec3 com_velocity() const { return {com_x.velocity, com_y.velocity, com_z.velocity}; }
    Vec3 com_acceleration() const {
        return {com_x.acceleration, com_y.acceleration, com_z.acceleration};
    }
};

WorldState initial_world(const Scenario& scenario);

struct ContactEvent {
    double time = 0.0;
    std::string id;
    bool engaged = false;  // false = released
};

/// One row per control cycle, logged at the post-propagation time.
struct CycleRecord {
    double time = 0.0;
    Vec3 com = Vec3::Zero();
    Vec3 com_vel = Vec3::Zero();
    Vec3 com_acc = Vec3::Zero();
    Vec3 jerk = Vec3::Zero();          // first-step inputs applied this cycle
    Vec2 zmp = Vec2::Zero();           // full-model ZMP with the applied force
    Vec2 zmp_lower = Vec2::Zero();     // first-step support bounds used by the QP
    Vec2 zmp_upper = Vec2::Zero();
    Vec2 delta = Vec2::Zero();         // realized ZMP shift at this cycle
    std::string contact_id;            // empty when no force is transmitted
    Vec3 force = Vec3::Zero();
    Vec3 contact_point = Vec3::Zero();
    Vec arm_angles;
    Vec qdot;
    std::vector<ContactEvent> events;  // engage/release transitions this cycle
};

struct SimTrace {
    std::vector<CycleRecord> records;
    std::vector<ContactEvent> events;
};

/// Runs one control cycle: stage 1, stage 2 (mode per scenario), conditional
/// stage 3, contact engage/release bookkeeping, then kinematic propagation.
CycleRecord step_cycle(WorldState& world, const Scenario& scenario, const CycleConfig& config,
                       int cycle_index);

SimTrace run_scenario(const Scenario& scenario, const CycleConfig& config);

/// Incremental variant: appends into `trace` so a failing run keeps the
/// cycles completed before the error.
void run_scenario_into(const Scenario& scenario, const CycleConfig& config, SimTrace& trace);

struct VerifyReport {
    double zmp_violation = 0.0;
    double friction_violation = 0.0;
    double vertical_band_violation = 0.0;
    double horizontal_band_violation = 0.0;
    double joint_limit_violation = 0.0;
    double identity_error = 0.0;  // |zmp_lipm + delta - zmp_full|

    bool pass() const {
        return zmp_violation <= 1e-6 && friction_violation <= 1e-9 &&
               vertical_band_violation <= 1e-6 && horizontal_band_violation <= 1e-6 &&
               joint_limit_violation <= 1e-9 && identity_error <= 1e-8;
    }
};

/// Post-hoc physics audit: recomputes the full-model ZMP from the logged
/// forces and checks every band, cone and limit the plan claimed to satisfy.
VerifyReport verify_trace(const SimTrace& trace, const Scenario& scenario);

}  // namespace mcmpc
