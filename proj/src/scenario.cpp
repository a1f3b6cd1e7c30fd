#include "mcmpc/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace mcmpc {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw ValidationError(path + ": " + msg);
}

const json& require(const json& obj, const std::string& path, const std::string& key) {
    if (!obj.contains(key)) fail(path, "missing required key '" + key + "'");
    return obj.at(key);
}

double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    return v.get<double>();
}

double as_positive(const json& v, const std::string& path) {
    const double x = as_number(v, path);
    if (x <= 0.0) fail(path, "must be positive");
    return x;
}

bool as_bool(const json& v, const std::string& path) {
    if (!v.is_boolean()) fail(path, "expected a boolean");
    return v.get<bool>();
}

std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
}

Vec3 as_vec3(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 3) fail(path, "expected an array of 3 numbers");
    return Vec3(as_number(v[0], path), as_number(v[1], path), as_number(v[2], path));
}

Vec2 as_vec2(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 2) fail(path, "expected an array of 2 numbers");
    return Vec2(as_number(v[0], path), as_number(v[1], path));
}

void reject_unknown(const json& obj, const std::string& path,
                    const std::set<std::string>& allowed) {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key)) fail(path, "unknown key '" + key + "'");
}

std::vector<TimedVec3> parse_vec3_series(const json& arr, const std::string& path,
                                         const std::string& value_key) {
    if (!arr.is_array() || arr.empty()) fail(path, "expected a non-empty array");
    std::vector<TimedVec3> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string p = path + "[" + std::to_string(i) + "]";
        reject_unknown(arr[i], p, {"t", value_key});
        TimedVec3 s;
        s.time = as_number(require(arr[i], p, "t"), p + ".t");
        s.value = as_vec3(require(arr[i], p, value_key), p + "." + value_key);
        out.push_back(s);
    }
    for (std::size_t i = 1; i < out.size(); ++i)
        if (out[i].time <= out[i - 1].time) fail(path, "sample times must strictly increase");
    return out;
}

json vec3_json(const Vec3& v) { return json::array({v(0), v(1), v(2)}); }
json vec2_json(const Vec2& v) { return json::array({v(0), v(1)}); }

json vec3_series_json(const std::vector<TimedVec3>& series, const std::string& value_key) {
    json arr = json::array();
    for (const auto& s : series) arr.push_back({{"t", s.time}, {value_key, vec3_json(s.value)}});
    return arr;
}

template <typename Series>
auto interpolate(const Series& series, double t) {
    if (t <= series.front().time) return series.front().value;
    for (std::size_t i = 1; i < series.size(); ++i) {
        if (t <= series[i].time) {
            const auto& a = series[i - 1];
            const auto& b = series[i];
            const double w = (t - a.time) / (b.time - a.time);
            return decltype(series.front().value)(a.value + w * (b.value - a.value));
        }
    }
    return series.back().value;
}

}  // namespace

void Scenario::validate() const {
    if (name.empty()) fail("name", "must be non-empty");
    if (duration <= 0.0) fail("duration", "must be positive");
    if (horizon.steps <= 0) fail("horizon.steps", "must be positive");
    if (horizon.dt <= 0.0) fail("horizon.dt", "must be positive");
    try {
        robot.validate();
    } catch (const std::exception& e) {
        fail("robot", e.what());
    }
    if (gravity <= 0.0) fail("robot.gravity", "must be positive");

    if (vertical_reference.empty()) fail("vertical_reference", "must be non-empty");
    for (std::size_t i = 0; i < vertical_reference.size(); ++i) {
        if (vertical_reference[i].value <= 0.0)
            fail("vertical_reference[" + std::to_string(i) + "].value", "must be positive");
        if (i > 0 && vertical_reference[i].time <= vertical_reference[i - 1].time)
            fail("vertical_reference", "sample times must strictly increase");
    }

    const int num_arms = static_cast<int>(robot.arms.size());
    std::set<int> seen_arms;
    for (std::size_t i = 0; i < hand_reference.size(); ++i) {
        const std::string p = "hand_reference[" + std::to_string(i) + "]";
        const auto& hr = hand_reference[i];
        if (hr.arm < 0 || hr.arm >= num_arms) fail(p + ".arm", "arm index out of range");
        if (!seen_arms.insert(hr.arm).second) fail(p + ".arm", "duplicate arm entry");
        if (hr.series.empty()) fail(p + ".series", "must be non-empty");
    }

    if (support_schedule.empty()) fail("support_schedule", "must be non-empty");
    const double end_needed = duration + horizon.steps * horizon.dt;
    if (support_schedule.front().t_start > 0.0)
        fail("support_schedule", "first phase must start at t <= 0");
    for (std::size_t i = 0; i < support_schedule.size(); ++i) {
        const std::string p = "support_schedule[" + std::to_string(i) + "]";
        const auto& ph = support_schedule[i];
        if (ph.t_end <= ph.t_start) fail(p, "t_end must exceed t_start");
        if ((ph.upper - ph.lower).minCoeff() <= 0.0) fail(p, "upper must exceed lower per axis");
        if (i > 0 && std::abs(ph.t_start - support_schedule[i - 1].t_end) > 1e-12)
            fail(p + ".t_start", "phases must be contiguous");
    }
    if (support_schedule.back().t_end < end_needed)
        fail("support_schedule", "must cover the run duration plus one preview horizon");

    std::set<std::string> ids;
    for (std::size_t i = 0; i < contact_candidates.size(); ++i) {
        const std::string p = "contact_candidates[" + std::to_string(i) + "]";
        const auto& tc = contact_candidates[i];
        try {
            tc.candidate.validate();
        } catch (const std::exception& e) {
            fail(p, e.what());
        }
        if (!ids.insert(tc.candidate.id).second) fail(p + ".id", "duplicate candidate id");
        if (tc.available_to <= tc.available_from)
            fail(p + ".available_to", "must exceed available_from");
    }

    if (mode == ScenarioMode::known_force) {
        if (!contact_candidates.empty())
            fail("contact_candidates", "must be empty in known_force mode");
        if (!external_load)
            fail("external_load", "required in known_force mode (zero mass is allowed)");
    } else {
        if (external_load) fail("external_load", "only allowed in known_force mode");
        bool any_reachable = false;
        for (const auto& tc : contact_candidates) any_reachable |= tc.candidate.reachable;
        if (!any_reachable)
            fail("contact_candidates",
                 "unknown_force mode requires at least one reachable candidate");
    }

    if (external_load) {
        if (external_load->mass < 0.0) fail("external_load.mass", "must be nonnegative");
        if (external_load->release_time <= external_load->attach_time)
            fail("external_load.release_time", "must exceed attach_time");
    }
    for (std::size_t i = 0; i < disturbances.size(); ++i)
        if (disturbances[i].jitter < 0.0)
            fail("disturbances[" + std::to_string(i) + "].jitter", "must be nonnegative");

    if (initial_com(2) < robot.com_floor || initial_com(2) > robot.com_ceiling)
        fail("robot.initial_com", "initial height outside the CoM limits");
    if (initial_arm_angles.size() != 0 &&
        initial_arm_angles.size() != robot.num_arm_joints())
        fail("robot.initial_arm_angles", "size must match the arm joint count");
    for (Eigen::Index i = 0; i < initial_arm_angles.size(); ++i)
        if (initial_arm_angles(i) < robot.joint_lower(i) ||
            initial_arm_angles(i) > robot.joint_upper(i))
            fail("robot.initial_arm_angles", "entry outside the joint limits");

    if (weights.jerk_w <= 0.0 || weights.delta_w <= 0.0 || weights.qdot_w <= 0.0 ||
        weights.com_track_w < 0.0 || weights.hand_track_w < 0.0)
        fail("robot.weights", "regularization weights must be positive");
    if (delta_threshold <= 0.0) fail("robot.delta_threshold", "must be positive");
    if (reach_duration < horizon.dt)
        fail("robot.reach_duration", "must be at least one control period");
    if (zmp_margin < 0.0) fail("robot.zmp_margin", "must be nonnegative");
}

double Scenario::vertical_reference_at(double t) const {
    return interpolate(vertical_reference, t);
}

const HandReference* Scenario::hand_entry(int arm) const {
    for (const auto& hr : hand_reference)
        if (hr.arm == arm) return &hr;
    return nullptr;
}

Vec3 Scenario::hand_reference_at(int arm, double t) const {
    const HandReference* hr = hand_entry(arm);
    if (hr == nullptr)
        throw StructuralError("no hand reference for arm " + std::to_string(arm));
    return interpolate(hr->series, t);
}

SupportPhase Scenario::support_at(double t) const {
    for (const auto& ph : support_schedule)
        if (t >= ph.t_start - 1e-12 && t < ph.t_end - 1e-12) return ph;
    if (!support_schedule.empty() && t <= support_schedule.back().t_end + 1e-12)
        return support_schedule.back();
    throw ValidationError("support_schedule: no phase covers t=" + std::to_string(t));
}

std::vector<ContactCandidate> Scenario::candidates_available_at(double t) const {
    std::vector<ContactCandidate> out;
    for (const auto& tc : contact_candidates)
        if (t >= tc.available_from - 1e-12 && t <= tc.available_to + 1e-12)
            out.push_back(tc.candidate);
    return out;
}

Scenario parse_scenario_text(const std::string& json_text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ValidationError(origin + ": not valid JSON: " + e.what());
    }
    reject_unknown(doc, origin,
                   {"name", "robot", "horizon", "mode", "vertical_reference", "hand_reference",
                    "support_schedule", "contact_candidates", "external_load", "disturbances",
                    "duration"});

    Scenario sc;
    sc.name = as_string(require(doc, origin, "name"), "name");
    sc.duration = as_positive(require(doc, origin, "duration"), "duration");

    const json& hz = require(doc, origin, "horizon");
    reject_unknown(hz, "horizon", {"steps", "dt"});
    sc.horizon.steps = static_cast<int>(as_positive(require(hz, "horizon", "steps"),
                                                    "horizon.steps"));
    sc.horizon.dt = as_positive(require(hz, "horizon", "dt"), "horizon.dt");

    const std::string mode = as_string(require(doc, origin, "mode"), "mode");
    if (mode == "known_force")
        sc.mode = ScenarioMode::known_force;
    else if (mode == "unknown_force")
        sc.mode = ScenarioMode::unknown_force;
    else
        fail("mode", "must be 'known_force' or 'unknown_force'");

    // robot block: model overrides, initial state and planner tuning
    const json& rb = require(doc, origin, "robot");
    reject_unknown(rb, "robot",
                   {"total_mass", "gravity", "reach_xy", "reach_z", "com_floor", "com_ceiling",
                    "joint_vel_limit", "initial_com", "initial_arm_angles", "weights",
                    "delta_threshold", "reach_duration", "zmp_margin"});
    sc.robot = RobotModel::default_model();
    if (rb.contains("total_mass"))
        sc.robot.total_mass = as_positive(rb["total_mass"], "robot.total_mass");
    if (rb.contains("gravity")) sc.gravity = as_positive(rb["gravity"], "robot.gravity");
    if (rb.contains("reach_xy")) sc.robot.reach_xy = as_positive(rb["reach_xy"], "robot.reach_xy");
    if (rb.contains("reach_z")) sc.robot.reach_z = as_positive(rb["reach_z"], "robot.reach_z");
    if (rb.contains("com_floor"))
        sc.robot.com_floor = as_positive(rb["com_floor"], "robot.com_floor");
    if (rb.contains("com_ceiling"))
        sc.robot.com_ceiling = as_positive(rb["com_ceiling"], "robot.com_ceiling");
    if (rb.contains("joint_vel_limit"))
        sc.robot.joint_vel_limit = as_positive(rb["joint_vel_limit"], "robot.joint_vel_limit");
    if (rb.contains("initial_com")) sc.initial_com = as_vec3(rb["initial_com"], "robot.initial_com");
    if (rb.contains("initial_arm_angles")) {
        const json& arr = rb["initial_arm_angles"];
        if (!arr.is_array()) fail("robot.initial_arm_angles", "expected an array");
        sc.initial_arm_angles.resize(static_cast<Eigen::Index>(arr.size()));
        for (std::size_t i = 0; i < arr.size(); ++i)
            sc.initial_arm_angles(static_cast<Eigen::Index>(i)) =
                as_number(arr[i], "robot.initial_arm_angles");
    }
    if (rb.contains("weights")) {
        const json& w = rb["weights"];
        reject_unknown(w, "robot.weights", {"jerk", "delta", "qdot", "com_track", "hand_track"});
        if (w.contains("jerk")) sc.weights.jerk_w = as_positive(w["jerk"], "robot.weights.jerk");
        if (w.contains("delta")) sc.weights.delta_w = as_positive(w["delta"], "robot.weights.delta");
        if (w.contains("qdot")) sc.weights.qdot_w = as_positive(w["qdot"], "robot.weights.qdot");
        if (w.contains("com_track"))
            sc.weights.com_track_w = as_number(w["com_track"], "robot.weights.com_track");
        if (w.contains("hand_track"))
            sc.weights.hand_track_w = as_number(w["hand_track"], "robot.weights.hand_track");
    }
    if (rb.contains("delta_threshold"))
        sc.delta_threshold = as_positive(rb["delta_threshold"], "robot.delta_threshold");
    if (rb.contains("reach_duration"))
        sc.reach_duration = as_number(rb["reach_duration"], "robot.reach_duration");
    if (rb.contains("zmp_margin")) sc.zmp_margin = as_number(rb["zmp_margin"], "robot.zmp_margin");

    const json& vr = require(doc, origin, "vertical_reference");
    if (!vr.is_array() || vr.empty()) fail("vertical_reference", "expected a non-empty array");
    for (std::size_t i = 0; i < vr.size(); ++i) {
        const std::string p = "vertical_reference[" + std::to_string(i) + "]";
        reject_unknown(vr[i], p, {"t", "value"});
        TimedScalar s;
        s.time = as_number(require(vr[i], p, "t"), p + ".t");
        s.value = as_number(require(vr[i], p, "value"), p + ".value");
        sc.vertical_reference.push_back(s);
    }

    const json& hands = require(doc, origin, "hand_reference");
    if (!hands.is_array()) fail("hand_reference", "expected an array");
    for (std::size_t i = 0; i < hands.size(); ++i) {
        const std::string p = "hand_reference[" + std::to_string(i) + "]";
        reject_unknown(hands[i], p, {"arm", "band", "series"});
        HandReference hr;
        hr.arm = static_cast<int>(as_number(require(hands[i], p, "arm"), p + ".arm"));
        if (hands[i].contains("band")) hr.band = as_bool(hands[i]["band"], p + ".band");
        hr.series = parse_vec3_series(require(hands[i], p, "series"), p + ".series", "position");
        sc.hand_reference.push_back(std::move(hr));
    }

    const json& sup = require(doc, origin, "support_schedule");
    if (!sup.is_array()) fail("support_schedule", "expected an array");
    for (std::size_t i = 0; i < sup.size(); ++i) {
        const std::string p = "support_schedule[" + std::to_string(i) + "]";
        reject_unknown(sup[i], p, {"t_start", "t_end", "lower", "upper"});
        SupportPhase ph;
        ph.t_start = as_number(require(sup[i], p, "t_start"), p + ".t_start");
        ph.t_end = as_number(require(sup[i], p, "t_end"), p + ".t_end");
        ph.lower = as_vec2(require(sup[i], p, "lower"), p + ".lower");
        ph.upper = as_vec2(require(sup[i], p, "upper"), p + ".upper");
        sc.support_schedule.push_back(ph);
    }

    const json& cands = require(doc, origin, "contact_candidates");
    if (!cands.is_array()) fail("contact_candidates", "expected an array");
    for (std::size_t i = 0; i < cands.size(); ++i) {
        const std::string p = "contact_candidates[" + std::to_string(i) + "]";
        reject_unknown(cands[i], p,
                       {"id", "point", "normal", "mu", "weight", "available_from", "available_to"});
        TimedCandidate tc;
        tc.candidate.id = as_string(require(cands[i], p, "id"), p + ".id");
        tc.candidate.point = as_vec3(require(cands[i], p, "point"), p + ".point");
        tc.candidate.normal = as_vec3(require(cands[i], p, "normal"), p + ".normal");
        tc.candidate.mu = as_number(require(cands[i], p, "mu"), p + ".mu");
        if (cands[i].contains("weight"))
            tc.candidate.weight = as_number(cands[i]["weight"], p + ".weight");
        if (cands[i].contains("available_from"))
            tc.available_from = as_number(cands[i]["available_from"], p + ".available_from");
        if (cands[i].contains("available_to"))
            tc.available_to = as_number(cands[i]["available_to"], p + ".available_to");
        sc.contact_candidates.push_back(std::move(tc));
    }

    if (doc.contains("external_load")) {
        const json& el = doc["external_load"];
        reject_unknown(el, "external_load", {"mass", "attach_time", "release_time", "position"});
        ExternalLoad load;
        load.mass = as_number(require(el, "external_load", "mass"), "external_load.mass");
        load.attach_time =
            as_number(require(el, "external_load", "attach_time"), "external_load.attach_time");
        if (el.contains("release_time"))
            load.release_time = as_number(el["release_time"], "external_load.release_time");
        load.position = parse_vec3_series(require(el, "external_load", "position"),
                                          "external_load.position", "position");
        sc.external_load = std::move(load);
    }

    if (doc.contains("disturbances")) {
        const json& ds = doc["disturbances"];
        if (!ds.is_array()) fail("disturbances", "expected an array");
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const std::string p = "disturbances[" + std::to_string(i) + "]";
            reject_unknown(ds[i], p, {"t", "velocity_impulse", "jitter"});
            Disturbance d;
            d.time = as_number(require(ds[i], p, "t"), p + ".t");
            d.velocity_impulse =
                as_vec3(require(ds[i], p, "velocity_impulse"), p + ".velocity_impulse");
            if (ds[i].contains("jitter")) d.jitter = as_number(ds[i]["jitter"], p + ".jitter");
            sc.disturbances.push_back(d);
        }
    }

    sc.validate();
    return sc;
}

Scenario parse_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError(path + ": cannot open scenario file");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario_text(buf.str(), path);
}

std::string serialize_scenario(const Scenario& sc) {
    json doc;
    doc["name"] = sc.name;
    doc["duration"] = sc.duration;
    doc["horizon"] = {{"steps", sc.horizon.steps}, {"dt", sc.horizon.dt}};
    doc["mode"] = sc.mode == ScenarioMode::known_force ? "known_force" : "unknown_force";

    json rb;
    rb["total_mass"] = sc.robot.total_mass;
    rb["gravity"] = sc.gravity;
    rb["reach_xy"] = sc.robot.reach_xy;
    rb["reach_z"] = sc.robot.reach_z;
    rb["com_floor"] = sc.robot.com_floor;
    rb["com_ceiling"] = sc.robot.com_ceiling;
    rb["joint_vel_limit"] = sc.robot.joint_vel_limit;
    rb["initial_com"] = vec3_json(sc.initial_com);
    if (sc.initial_arm_angles.size() > 0) {
        json arr = json::array();
        for (Eigen::Index i = 0; i < sc.initial_arm_angles.size(); ++i)
            arr.push_back(sc.initial_arm_angles(i));
        rb["initial_arm_angles"] = arr;
    }
    rb["weights"] = {{"jerk", sc.weights.jerk_w},
                     {"delta", sc.weights.delta_w},
                     {"qdot", sc.weights.qdot_w},
                     {"com_track", sc.weights.com_track_w},
                     {"hand_track", sc.weights.hand_track_w}};
    rb["delta_threshold"] = sc.delta_threshold;
    rb["reach_duration"] = sc.reach_duration;
    rb["zmp_margin"] = sc.zmp_margin;
    doc["robot"] = std::move(rb);

    json vr = json::array();
    for (const auto& s : sc.vertical_reference) vr.push_back({{"t", s.time}, {"value", s.value}});
    doc["vertical_reference"] = std::move(vr);

    json hands = json::array();
    for (const auto& hr : sc.hand_reference)
        hands.push_back({{"arm", hr.arm},
                         {"band", hr.band},
                         {"series", vec3_series_json(hr.series, "position")}});
    doc["hand_reference"] = std::move(hands);

    json sup = json::array();
    for (const auto& ph : sc.support_schedule)
        sup.push_back({{"t_start", ph.t_start},
                       {"t_end", ph.t_end},
                       {"lower", vec2_json(ph.lower)},
                       {"upper", vec2_json(ph.upper)}});
    doc["support_schedule"] = std::move(sup);

    json cands = json::array();
    for (const auto& tc : sc.contact_candidates) {
        json c = {{"id", tc.candidate.id},
                  {"point", vec3_json(tc.candidate.point)},
                  {"normal", vec3_json(tc.candidate.normal)},
                  {"mu", tc.candidate.mu},
                  {"weight", tc.candidate.weight},
                  {"available_from", tc.available_from}};
        if (tc.available_to < kInf) c["available_to"] = tc.available_to;
        cands.push_back(std::move(c));
    }
    doc["contact_candidates"] = std::move(cands);

    if (sc.external_load) {
        json el = {{"mass", sc.external_load->mass},
                   {"attach_time", sc.external_load->attach_time},
                   {"position", vec3_series_json(sc.external_load->position, "position")}};
        if (sc.external_load->release_time < kInf)
            el["release_time"] = sc.external_load->release_time;
        doc["external_load"] = std::move(el);
    }
    if (!sc.disturbances.empty()) {
        json ds = json::array();
        for (const auto& d : sc.disturbances)
            ds.push_back({{"t", d.time},
                          {"velocity_impulse", vec3_json(d.velocity_impulse)},
                          {"jitter", d.jitter}});
        doc["disturbances"] = std::move(ds);
    }
    return doc.dump(2) + "\n";
}

}  // namespace mcmpc
