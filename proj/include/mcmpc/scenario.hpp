#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mcmpc/kinematics.hpp"
#include "mcmpc/preview.hpp"
#include "mcmpc/stage2.hpp"
#include "mcmpc/stage3.hpp"
#include "mcmpc/zmp.hpp"

namespace mcmpc {

/// Scenario-file validation failure; message names the offending key.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TimedScalar {
    double time = 0.0;
    double value = 0.0;
};

struct TimedVec3 {
    double time = 0.0;
    Vec3 value = Vec3::Zero();
};

struct SupportPhase {
    double t_start = 0.0;
    double t_end = 0.0;
    Vec2 lower = Vec2::Zero();
    Vec2 upper = Vec2::Zero();
};

struct HandReference {
    int arm = 0;
    std::vector<TimedVec3> series;
    bool band = true;  // apply the horizontal CoM-to-reference constraint
};

struct ExternalLoad {
    double mass = 0.0;          // [kg]
    double attach_time = 0.0;   // [s]
    double release_time = kInf;
    std::vector<TimedVec3> position;
};

struct Disturbance {
    double time = 0.0;
    Vec3 velocity_impulse = Vec3::Zero();
    double jitter = 0.0;  // relative magnitude randomization, seeded
};

/// Contact candidate plus the time window in which the hand can reach it.
struct TimedCandidate {
    ContactCandidate candidate;
    double available_from = 0.0;
    double available_to = kInf;
};

enum class ScenarioMode { known_force, unknown_force };

struct Scenario {
    std::string name;
    RobotModel robot;
    double gravity = 9.81;
    PreviewParams horizon;
    ScenarioMode mode = ScenarioMode::unknown_force;
    std::vector<TimedScalar> vertical_reference;
    std::vector<HandReference> hand_reference;
    std::vector<SupportPhase> support_schedule;
    std::vector<TimedCandidate> contact_candidates;
    std::optional<ExternalLoad> external_load;
    std::vector<Disturbance> disturbances;
    double duration = 0.0;

    // initial world state
    Vec3 initial_com = Vec3(0, 0, 0.8);
    Vec initial_arm_angles;

    // planner tuning (scenario-configurable, with spec'd defaults)
    Stage2Weights weights;
    double delta_threshold = 1e-3;  // [m]
    double reach_duration = 0.3;    // [s]
    double zmp_margin = 0.01;       // [m], support rectangle shrink

    CentroidalParams centroidal() const { return {robot.total_mass, gravity}; }

    /// Checks every invariant (schedule coverage, mode/field pairing,
    /// candidate requirements); throws ValidationError naming the key.
    void validate() const;

    // piecewise-linear lookups; the last sample is held beyond the series end
    double vertical_reference_at(double t) const;
    Vec3 hand_reference_at(int arm, double t) const;
    const HandReference* hand_entry(int arm) const;
    SupportPhase support_at(double t) const;  // throws on schedule gap
    std::vector<ContactCandidate> candidates_available_at(double t) const;
};

Scenario parse_scenario(const std::string& path);
std::string serialize_scenario(const Scenario& scenario);  // JSON text
Scenario parse_scenario_text(const std::string& json_text, const std::string& origin = "<text>");

}  // namespace mcmpc
