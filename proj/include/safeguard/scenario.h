// Copyright 2026 The SafeGuardPF Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SAFEGUARD_SCENARIO_H_
#define SAFEGUARD_SCENARIO_H_

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "safeguard/core.h"
#include "safeguard/sim.h"
#include "safeguard/world.h"

// JSON scenario files:
//
//   {"arena": {"width", "height", "origin": [x, y], "walls": bool,
//              "wall_thickness"},
//    "robots": [{"spawn": {"x", "y", "theta"}, "params": {...},
//                "gains": {"k_att", "k_rep", "grad_cap"},
//                "waypoints": [[x, y], ...], "arrival_tolerance"}],
//    "obstacles": [{"shape": {...}, "motion": {...}, "speed_limit",
//                   "static_trust"}],
//    "sensor": {"max_range"},
//    "sim": {"duration", "substep", "jitter", "jitter_min_fraction", "seed"},
//    "allow_assumption_breach": bool}
//
// Units are SI. Errors name the offending field path.
namespace safeguard {

class ScenarioError : public Error {
 public:
  ScenarioError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

namespace scenario_detail {

using nlohmann::json;

inline const json& Require(const json& j, const std::string& path,
                           const char* key) {
  if (!j.is_object()) throw ScenarioError(path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw ScenarioError(path + "." + key, "missing");
  return *it;
}

inline double Number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ScenarioError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ScenarioError(path, "not finite");
  return v;
}

inline double NumberOr(const json& j, const std::string& path, const char* key,
                       double fallback) {
  if (!j.contains(key)) return fallback;
  return Number(j[key], path + "." + key);
}

inline bool BoolOr(const json& j, const std::string& path, const char* key,
                   bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_boolean()) {
    throw ScenarioError(path + "." + key, "expected a boolean");
  }
  return j[key].get<bool>();
}

inline Vec2 Point(const json& j, const std::string& path) {
  if (j.is_array() && j.size() == 2) {
    return {Number(j[0], path + "[0]"), Number(j[1], path + "[1]")};
  }
  if (j.is_object()) {
    return {Number(Require(j, path, "x"), path + ".x"),
            Number(Require(j, path, "y"), path + ".y")};
  }
  throw ScenarioError(path, "expected [x, y]");
}

inline std::vector<Vec2> Points(const json& j, const std::string& path) {
  if (!j.is_array()) throw ScenarioError(path, "expected an array");
  std::vector<Vec2> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(Point(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

inline RobotParams Params(const json& j, const std::string& path) {
  RobotParams p;
  if (!j.is_object()) throw ScenarioError(path, "expected an object");
  p.accel_max = NumberOr(j, path, "accel_max", p.accel_max);
  p.brake = NumberOr(j, path, "brake", p.brake);
  p.omega_max = NumberOr(j, path, "omega_max", p.omega_max);
  p.cycle_max = NumberOr(j, path, "cycle_max", p.cycle_max);
  p.obstacle_speed_max =
      NumberOr(j, path, "obstacle_speed_max", p.obstacle_speed_max);
  p.velocity_margin = NumberOr(j, path, "velocity_margin", p.velocity_margin);
  p.radius = NumberOr(j, path, "radius", p.radius);
  try {
    p.Validate();
  } catch (const Error& e) {
    throw ScenarioError(path, e.what());
  }
  return p;
}

inline FieldGains Gains(const json& j, const std::string& path) {
  FieldGains g;
  if (!j.is_object()) throw ScenarioError(path, "expected an object");
  g.k_att = NumberOr(j, path, "k_att", g.k_att);
  g.k_rep = NumberOr(j, path, "k_rep", g.k_rep);
  if (j.contains("grad_cap") && !j["grad_cap"].is_null()) {
    g.grad_cap = Number(j["grad_cap"], path + ".grad_cap");
  }
  try {
    g.Validate();
  } catch (const Error& e) {
    throw ScenarioError(path, e.what());
  }
  return g;
}

inline std::string Type(const json& j, const std::string& path) {
  const json& t = Require(j, path, "type");
  if (!t.is_string()) throw ScenarioError(path + ".type", "expected a string");
  return t.get<std::string>();
}

// Shapes are given in world coordinates; the obstacle position becomes the
// shape's reference point (disc centre or polygon vertex mean).
inline void ShapeInto(Obstacle& obs, const json& j, const std::string& path) {
  const std::string type = Type(j, path);
  if (type == "disc") {
    const Vec2 center = Point(Require(j, path, "center"), path + ".center");
    const double r = Number(Require(j, path, "radius"), path + ".radius");
    if (!(r > 0.0)) throw ScenarioError(path + ".radius", "must be > 0");
    obs.position = center;
    obs.shape = Disc{{0.0, 0.0}, r};
  } else if (type == "polygon" || type == "rect") {
    std::vector<Vec2> verts;
    if (type == "rect") {
      const Vec2 lo = Point(Require(j, path, "min"), path + ".min");
      const Vec2 hi = Point(Require(j, path, "max"), path + ".max");
      verts = {lo, {hi.x, lo.y}, hi, {lo.x, hi.y}};
    } else {
      verts = Points(Require(j, path, "vertices"), path + ".vertices");
    }
    try {
      verts = geometry::NormalizeConvex(std::move(verts));
    } catch (const Error& e) {
      throw ScenarioError(path, e.what());
    }
    const Vec2 c = geometry::Centroid(verts);
    for (Vec2& v : verts) v -= c;
    obs.position = c;
    obs.shape = Polygon{std::move(verts)};
  } else {
    throw ScenarioError(path + ".type", "unknown shape '" + type + "'");
  }
}

inline Motion MotionFrom(const json& j, const std::string& path,
                         double speed_limit) {
  const std::string type = Type(j, path);
  if (type == "static") return StaticMotion{};
  if (type == "scripted") {
    ScriptedMotion m;
    m.path = Points(Require(j, path, "path"), path + ".path");
    if (m.path.empty()) throw ScenarioError(path + ".path", "empty");
    if (j.contains("speeds")) {
      const json& s = j["speeds"];
      if (!s.is_array())
        throw ScenarioError(path + ".speeds", "expected an array");
      for (std::size_t i = 0; i < s.size(); ++i) {
        m.speeds.push_back(
            Number(s[i], path + ".speeds[" + std::to_string(i) + "]"));
      }
    } else {
      m.speeds.push_back(NumberOr(j, path, "speed", speed_limit));
    }
    if (m.speeds.empty()) throw ScenarioError(path + ".speeds", "empty");
    for (double s : m.speeds) {
      if (s < 0.0) throw ScenarioError(path + ".speeds", "negative speed");
    }
    m.loop = BoolOr(j, path, "loop", false);
    return m;
  }
  if (type == "pursuit") {
    PursuitMotion m;
    const double target = Number(Require(j, path, "target"), path + ".target");
    if (target < 0 || target != std::floor(target)) {
      throw ScenarioError(path + ".target", "expected a robot index");
    }
    m.target = static_cast<std::size_t>(target);
    m.speed = NumberOr(j, path, "speed", speed_limit);
    if (m.speed < 0.0) throw ScenarioError(path + ".speed", "must be >= 0");
    return m;
  }
  if (type == "teleop") return TeleopMotion{};
  throw ScenarioError(path + ".type", "unknown motion '" + type + "'");
}

}  // namespace scenario_detail

// Four static rectangles framing the arena from the outside.
inline std::vector<Obstacle> ArenaWalls(const Arena& arena, double thickness,
                                        double speed_limit) {
  const double x0 = arena.origin.x, y0 = arena.origin.y;
  const double x1 = x0 + arena.width, y1 = y0 + arena.height;
  const double t = thickness;
  const Vec2 boxes[4][2] = {{{x0 - t, y0 - t}, {x1 + t, y0}},
                            {{x0 - t, y1}, {x1 + t, y1 + t}},
                            {{x0 - t, y0}, {x0, y1}},
                            {{x1, y0}, {x1 + t, y1}}};
  std::vector<Obstacle> walls;
  for (const auto& box : boxes) {
    const Vec2 lo = box[0], hi = box[1];
    std::vector<Vec2> verts = {lo, {hi.x, lo.y}, hi, {lo.x, hi.y}};
    const Vec2 c = geometry::Centroid(verts);
    for (Vec2& v : verts) v -= c;
    Obstacle wall;
    wall.shape = Polygon{std::move(verts)};
    wall.position = c;
    wall.speed_limit = speed_limit;
    walls.push_back(std::move(wall));
  }
  return walls;
}

inline JitterPolicy ParseJitter(const std::string& s, const std::string& path) {
  if (s == "fixed") return JitterPolicy::kFixed;
  if (s == "uniform") return JitterPolicy::kUniform;
  throw ScenarioError(path, "unknown jitter policy '" + s + "'");
}

inline Scenario ScenarioFromJson(const nlohmann::json& root) {
  using namespace scenario_detail;
  if (!root.is_object()) throw ScenarioError("$", "expected an object");
  Scenario sc;

  const json& robots = Require(root, "$", "robots");
  if (!robots.is_array() || robots.empty()) {
    throw ScenarioError("$.robots", "expected a non-empty array");
  }
  double v_bound = 0.0;
  for (std::size_t i = 0; i < robots.size(); ++i) {
    const std::string path = "$.robots[" + std::to_string(i) + "]";
    const json& r = robots[i];
    RobotSpec spec;
    const json& spawn = Require(r, path, "spawn");
    spec.spawn.position = Point(spawn, path + ".spawn");
    spec.spawn.theta =
        WrapAngle(NumberOr(spawn, path + ".spawn", "theta", 0.0));
    spec.params = r.contains("params") ? Params(r["params"], path + ".params")
                                       : RobotParams{};
    spec.gains =
        r.contains("gains") ? Gains(r["gains"], path + ".gains") : FieldGains{};
    spec.plan.waypoints =
        Points(Require(r, path, "waypoints"), path + ".waypoints");
    if (spec.plan.waypoints.empty()) {
      throw ScenarioError(path + ".waypoints", "empty");
    }
    spec.plan.arrival_tolerance =
        NumberOr(r, path, "arrival_tolerance", spec.plan.arrival_tolerance);
    if (!(spec.plan.arrival_tolerance > 0.0)) {
      throw ScenarioError(path + ".arrival_tolerance", "must be > 0");
    }
    v_bound = i == 0 ? spec.params.obstacle_speed_max
                     : std::min(v_bound, spec.params.obstacle_speed_max);
    sc.robots.push_back(std::move(spec));
  }

  if (root.contains("arena")) {
    const json& a = root["arena"];
    const std::string path = "$.arena";
    Arena arena;
    arena.width = Number(Require(a, path, "width"), path + ".width");
    arena.height = Number(Require(a, path, "height"), path + ".height");
    if (!(arena.width > 0.0) || !(arena.height > 0.0)) {
      throw ScenarioError(path, "width and height must be > 0");
    }
    if (a.contains("origin"))
      arena.origin = Point(a["origin"], path + ".origin");
    sc.arena = arena;
    if (BoolOr(a, path, "walls", false)) {
      const double t = NumberOr(a, path, "wall_thickness", 0.1);
      if (!(t > 0.0))
        throw ScenarioError(path + ".wall_thickness", "must be > 0");
      for (Obstacle& w : ArenaWalls(arena, t, v_bound)) {
        sc.obstacles.push_back(std::move(w));
      }
    }
  }

  sc.allow_assumption_breach =
      BoolOr(root, "$", "allow_assumption_breach", false);

  if (root.contains("obstacles")) {
    const json& obstacles = root["obstacles"];
    if (!obstacles.is_array()) {
      throw ScenarioError("$.obstacles", "expected an array");
    }
    for (std::size_t i = 0; i < obstacles.size(); ++i) {
      const std::string path = "$.obstacles[" + std::to_string(i) + "]";
      const json& o = obstacles[i];
      Obstacle obs;
      ShapeInto(obs, Require(o, path, "shape"), path + ".shape");
      obs.speed_limit = NumberOr(o, path, "speed_limit", v_bound);
      if (obs.speed_limit < 0.0) {
        throw ScenarioError(path + ".speed_limit", "must be >= 0");
      }
      if (o.contains("motion")) {
        obs.motion = MotionFrom(o["motion"], path + ".motion", obs.speed_limit);
      }
      obs.static_trust = BoolOr(o, path, "static_trust", false);
      sc.obstacles.push_back(std::move(obs));
    }
  }

  if (root.contains("sensor")) {
    sc.sensor.max_range =
        NumberOr(root["sensor"], "$.sensor", "max_range", sc.sensor.max_range);
    if (!(sc.sensor.max_range > 0.0)) {
      throw ScenarioError("$.sensor.max_range", "must be > 0");
    }
  }

  if (root.contains("sim")) {
    const json& s = root["sim"];
    const std::string path = "$.sim";
    if (!s.is_object()) throw ScenarioError(path, "expected an object");
    sc.sim.duration = NumberOr(s, path, "duration", sc.sim.duration);
    sc.sim.substep = NumberOr(s, path, "substep", sc.sim.substep);
    sc.sim.jitter_min_fraction =
        NumberOr(s, path, "jitter_min_fraction", sc.sim.jitter_min_fraction);
    if (s.contains("jitter")) {
      if (!s["jitter"].is_string()) {
        throw ScenarioError(path + ".jitter", "expected a string");
      }
      sc.sim.jitter =
          ParseJitter(s["jitter"].get<std::string>(), path + ".jitter");
    }
    if (s.contains("seed")) {
      if (!s["seed"].is_number_unsigned()) {
        throw ScenarioError(path + ".seed", "expected a non-negative integer");
      }
      sc.sim.seed = s["seed"].get<std::uint64_t>();
    }
  }

  try {
    ValidateScenario(sc);
  } catch (const ScenarioError&) {
    throw;
  } catch (const Error& e) {
    throw ScenarioError("$", e.what());
  }
  return sc;
}

inline Scenario ScenarioFromString(const std::string& text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioError("$", std::string("invalid JSON: ") + e.what());
  }
  return ScenarioFromJson(root);
}

inline Scenario LoadScenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("$", "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return ScenarioFromString(buf.str());
}

}  // namespace safeguard

#endif  // SAFEGUARD_SCENARIO_H_
