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

#ifndef SAFEGUARD_SIM_H_
#define SAFEGUARD_SIM_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "safeguard/controller.h"
#include "safeguard/core.h"
#include "safeguard/field.h"
#include "safeguard/safety.h"
#include "safeguard/world.h"

namespace safeguard {

// Speeds at or below this count as "at rest" for passive safety.
inline constexpr double kRestSpeed = 1e-9;

enum class JitterPolicy { kFixed, kUniform };

struct SimConfig {
  double duration = 60.0;
  // Integration step; 0 selects cycle_max / 20.
  double substep = 0.0;
  JitterPolicy jitter = JitterPolicy::kUniform;
  // Uniform jitter draws the cycle period from [fraction * eps, eps].
  double jitter_min_fraction = 0.5;
  std::uint64_t seed = 1;
};

struct Arena {
  Vec2 origin;
  double width = 0.0;
  double height = 0.0;

  bool Contains(const Vec2& p) const {
    return p.x >= origin.x && p.x <= origin.x + width && p.y >= origin.y &&
           p.y <= origin.y + height;
  }
};

struct RobotSpec {
  Pose spawn;
  RobotParams params;
  FieldGains gains;
  WaypointPlan plan;
};

struct Scenario {
  std::optional<Arena> arena;
  std::vector<RobotSpec> robots;
  std::vector<Obstacle> obstacles;
  SensorOptions sensor;
  SimConfig sim;
  // Permits obstacles faster than the robots' assumed V.
  bool allow_assumption_breach = false;
};

// One row of a trace: the state of one robot at one instant.
struct TraceRecord {
  double t = 0.0;
  std::size_t robot = 0;
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double v = 0.0;
  double omega = 0.0;
  Mode mode = Mode::kBrake;
  double v_star = 0.0;
  double omega_star = 0.0;
  double d = kNoObstacle;
  std::optional<double> alpha;
  bool collision = false;
  bool local_min = false;

  bool operator==(const TraceRecord&) const = default;
};

enum class StopReason { kRunning, kDuration, kGoalsReached, kFatalCollision };

struct Trace {
  std::vector<TraceRecord> records;
  StopReason reason = StopReason::kRunning;
};

// ---------------------------------------------------------------------------
// Plant

// Actuation held constant over one control cycle: translational acceleration,
// path curvature, and in-place spin (used only when the robot cannot move
// during the cycle).
struct Actuation {
  double accel = 0.0;
  double curvature = 0.0;
  double spin = 0.0;
};

// Velocity regulator: track v* with a = clamp((v* - v) / eps, -b, A) in
// Drive, brake at -b in Brake. Curvature is fixed for the cycle at
// omega* / v_peak so that omega = curvature * v never exceeds |omega*|.
inline Actuation PlanActuation(const RobotState& state, const Command& cmd,
                               double period, const RobotParams& p) {
  Actuation act;
  if (cmd.mode == Mode::kBrake) {
    act.accel = state.v > 0.0 ? -p.brake : 0.0;
  } else {
    const double wanted = (cmd.v_star - state.v) / p.cycle_max;
    act.accel = std::clamp(wanted, -p.brake, p.accel_max);
  }
  const double omega = std::clamp(cmd.omega_star, -p.omega_max, p.omega_max);
  const double v_end = std::max(0.0, state.v + act.accel * period);
  const double v_peak = std::max(state.v, v_end);
  if (v_peak > 0.0) {
    act.curvature = omega / v_peak;
  } else {
    act.spin = omega;
  }
  return act;
}

namespace detail {

// sin(x) / x, stable near zero.
inline double Sinc(double x) {
  if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

}  // namespace detail

// Advances the unicycle by `dt` under a fixed actuation. Exact: speed varies
// linearly (stopping at zero, never reversing) and the path is a circular
// arc of the given curvature, integrated via the chord formula.
inline RobotState IntegratePlant(const RobotState& state, const Actuation& act,
                                 double dt) {
  if (!(dt > 0.0)) throw Error("IntegratePlant: dt must be > 0");
  RobotState next = state;
  double travel = 0.0;
  if (act.accel < 0.0 && state.v + act.accel * dt <= 0.0) {
    travel = state.v * state.v / (-2.0 * act.accel);
    next.v = 0.0;
  } else {
    travel = state.v * dt + 0.5 * act.accel * dt * dt;
    next.v = std::max(0.0, state.v + act.accel * dt);
  }
  const double turn = act.curvature * travel;
  const double chord = travel * detail::Sinc(0.5 * turn);
  const double heading = state.pose.theta + 0.5 * turn;
  next.pose.position += UnitFromAngle(heading) * chord;
  next.pose.theta = WrapAngle(state.pose.theta + turn + act.spin * dt);
  next.omega = act.curvature * next.v + act.spin;
  return next;
}

// Convenience form: plan the actuation for a cycle lasting exactly `dt`.
inline RobotState IntegratePlant(const RobotState& state, const Command& cmd,
                                 double dt, const RobotParams& p) {
  if (!(dt > 0.0)) throw Error("IntegratePlant: dt must be > 0");
  return IntegratePlant(state, PlanActuation(state, cmd, dt, p), dt);
}

// ---------------------------------------------------------------------------
// Passive safety check

struct SafetyVerdict {
  bool pass = true;
  std::optional<std::size_t> first_violation;  // record index
};

// Passes iff every record flagged as a collision has the robot at rest.
inline SafetyVerdict CheckPassiveSafety(const std::vector<TraceRecord>& recs) {
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (recs[i].collision && recs[i].v > kRestSpeed) return {false, i};
  }
  return {};
}

inline SafetyVerdict CheckPassiveSafety(const Trace& trace) {
  return CheckPassiveSafety(trace.records);
}

// ---------------------------------------------------------------------------
// Scenario validation

inline void ValidateScenario(const Scenario& sc) {
  if (sc.robots.empty()) throw Error("scenario: no robots");
  if (!(sc.sim.duration > 0.0)) throw Error("sim.duration must be > 0");
  if (sc.sim.substep < 0.0) throw Error("sim.substep must be >= 0");
  if (!(sc.sim.jitter_min_fraction > 0.0 &&
        sc.sim.jitter_min_fraction <= 1.0)) {
    throw Error("sim.jitter_min_fraction must be in (0, 1]");
  }
  double eps = std::numeric_limits<double>::infinity();
  double v_bound = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sc.robots.size(); ++i) {
    const RobotSpec& r = sc.robots[i];
    const std::string where = "robots[" + std::to_string(i) + "]";
    try {
      r.params.Validate();
      r.gains.Validate();
      r.plan.Validate();
    } catch (const Error& e) {
      throw Error(where + ": " + e.what());
    }
    if (!r.spawn.position.IsFinite() || !std::isfinite(r.spawn.theta)) {
      throw Error(where + ".spawn: not finite");
    }
    if (sc.arena && !sc.arena->Contains(r.spawn.position)) {
      throw Error(where + ".spawn: outside arena");
    }
    eps = std::min(eps, r.params.cycle_max);
    v_bound = std::min(v_bound, r.params.obstacle_speed_max);
  }
  if (sc.sim.substep > eps / 10.0) {
    throw Error("sim.substep must be <= cycle_max / 10");
  }
  for (std::size_t i = 0; i < sc.obstacles.size(); ++i) {
    const Obstacle& obs = sc.obstacles[i];
    const std::string where = "obstacles[" + std::to_string(i) + "]";
    if (!obs.IsStatic() && !sc.allow_assumption_breach &&
        obs.speed_limit > v_bound) {
      throw Error(where +
                  ".speed_limit exceeds the robots' obstacle_speed_max");
    }
    if (obs.speed_limit < 0.0) throw Error(where + ".speed_limit must be >= 0");
    if (obs.static_trust && !obs.IsStatic()) {
      throw Error(where + ": static_trust requires static motion");
    }
    if (const auto* p = std::get_if<PursuitMotion>(&obs.motion)) {
      if (p->target >= sc.robots.size()) {
        throw Error(where + ".motion.target: no such robot");
      }
    }
  }

  WorldState world;
  for (const RobotSpec& r : sc.robots) {
    world.robots.push_back({r.spawn, 0.0, 0.0, Mode::kBrake});
    world.robot_radii.push_back(r.params.radius);
  }
  world.obstacles = sc.obstacles;
  for (std::size_t i = 0; i < sc.robots.size(); ++i) {
    if (Clearance(i, world) <= 0.0) {
      throw Error("robots[" + std::to_string(i) +
                  "].spawn: overlaps an obstacle or robot");
    }
    const auto& wps = sc.robots[i].plan.waypoints;
    for (std::size_t w = 0; w < wps.size(); ++w) {
      for (const Obstacle& obs : sc.obstacles) {
        if (!obs.IsStatic()) continue;
        const auto sp =
            geometry::ClosestOnShape(wps[w], obs.shape, obs.position);
        if (sp.signed_distance < sc.robots[i].params.radius) {
          throw Error("robots[" + std::to_string(i) + "].waypoints[" +
                      std::to_string(w) + "]: inside a static obstacle");
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Simulator

// Deterministic closed-loop simulation. Each call to StepCycle draws a cycle
// period, runs every robot's controller against one snapshot, then
// integrates robots and obstacles in substeps, monitoring contact at every
// substep.
class Simulator {
 public:
  explicit Simulator(Scenario scenario) : scenario_(std::move(scenario)) {
    ValidateScenario(scenario_);
    rng_.seed(scenario_.sim.seed);
    cycle_max_ = std::numeric_limits<double>::infinity();
    for (const RobotSpec& r : scenario_.robots) {
      world_.robots.push_back({r.spawn, 0.0, 0.0, Mode::kBrake});
      world_.robot_radii.push_back(r.params.radius);
      plans_.push_back(r.plan);
      cycle_max_ = std::min(cycle_max_, r.params.cycle_max);
    }
    world_.obstacles = scenario_.obstacles;
    substep_ =
        scenario_.sim.substep > 0.0 ? scenario_.sim.substep : cycle_max_ / 20.0;
    commands_.resize(world_.robots.size());
    perceptions_.resize(world_.robots.size());
  }

  const WorldState& world() const { return world_; }
  const Trace& trace() const { return trace_; }
  const std::vector<Command>& commands() const { return commands_; }
  const std::vector<Perception>& perceptions() const { return perceptions_; }
  const std::vector<WaypointPlan>& plans() const { return plans_; }
  const Scenario& scenario() const { return scenario_; }
  std::size_t cycle_index() const { return cycle_; }
  bool done() const { return trace_.reason != StopReason::kRunning; }

  // Runs one control cycle. Returns false once the run has terminated.
  bool StepCycle(const TeleopInputs& teleop = {}) {
    if (done()) return false;
    if (world_.time >= scenario_.sim.duration) {
      Finish(StopReason::kDuration);
      return false;
    }
    const double period = DrawPeriod();
    const std::size_t n_robots = world_.robots.size();

    for (std::size_t i = 0; i < n_robots; ++i) {
      plans_[i] = AdvanceWaypoint(plans_[i], world_.robots[i].pose.position);
    }
    if (std::all_of(plans_.begin(), plans_.end(),
                    [](const WaypointPlan& p) { return p.complete; }) &&
        std::all_of(world_.robots.begin(), world_.robots.end(),
                    [](const RobotState& r) { return r.v <= kRestSpeed; })) {
      Finish(StopReason::kGoalsReached);
      return false;
    }

    std::vector<Actuation> actuation(n_robots);
    for (std::size_t i = 0; i < n_robots; ++i) {
      const RobotSpec& spec = scenario_.robots[i];
      perceptions_[i] = Perceive(i);
      commands_[i] = ControlCycle(world_.robots[i], perceptions_[i], plans_[i],
                                  spec.gains, spec.params, world_.time);
      actuation[i] =
          PlanActuation(world_.robots[i], commands_[i], period, spec.params);
    }
    for (std::size_t i = 0; i < n_robots; ++i) {
      world_.robots[i].mode = commands_[i].mode;
      trace_.records.push_back(MakeRecord(i, perceptions_[i]));
    }

    events_.assign(n_robots, std::nullopt);
    pending_teleop_ = teleop;
    const double cycle_end = world_.time + period;
    const auto steps =
        static_cast<std::size_t>(std::ceil(period / substep_ - 1e-9));
    const double dt =
        period / static_cast<double>(std::max<std::size_t>(steps, 1));
    for (std::size_t s = 0; s < std::max<std::size_t>(steps, 1); ++s) {
      Substep(actuation, dt, 0);
    }
    world_.time = cycle_end;

    bool fatal = false;
    std::vector<TraceRecord> extra;
    for (std::size_t i = 0; i < n_robots; ++i) {
      if (!events_[i]) continue;
      if (events_[i]->v > kRestSpeed) fatal = true;
      if (events_[i]->t < cycle_end) extra.push_back(*events_[i]);
    }
    std::sort(extra.begin(), extra.end(), [](const auto& a, const auto& b) {
      return a.t != b.t ? a.t < b.t : a.robot < b.robot;
    });
    trace_.records.insert(trace_.records.end(), extra.begin(), extra.end());
    ++cycle_;
    if (fatal) {
      Finish(StopReason::kFatalCollision);
      return false;
    }
    return true;
  }

  const Trace& Run() {
    while (StepCycle()) {
    }
    return trace_;
  }

 private:
  static constexpr int kMaxBisections = 16;

  Perception Perceive(std::size_t i) const {
    const WaypointPlan& plan = plans_[i];
    std::optional<Vec2> goal;
    if (!plan.complete) goal = plan.ActiveWaypoint();
    return ClosestObstaclePoint(i, world_, goal, scenario_.sensor);
  }

  TraceRecord MakeRecord(std::size_t i, const Perception& per) const {
    const RobotState& r = world_.robots[i];
    TraceRecord rec;
    rec.t = world_.time;
    rec.robot = i;
    rec.x = r.pose.position.x;
    rec.y = r.pose.position.y;
    rec.theta = r.pose.theta;
    rec.v = r.v;
    rec.omega = r.omega;
    rec.mode = r.mode;
    rec.v_star = commands_[i].v_star;
    rec.omega_star = commands_[i].omega_star;
    rec.d = per.d;
    if (per.HasObstacle()) rec.alpha = per.alpha;
    rec.collision = Clearance(i, world_) <= 0.0;
    rec.local_min = commands_[i].local_minimum;
    return rec;
  }

  double DrawPeriod() {
    if (scenario_.sim.jitter == JitterPolicy::kFixed) return cycle_max_;
    // 53 random mantissa bits; independent of the standard library's
    // distribution implementation.
    const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    const double lo = scenario_.sim.jitter_min_fraction * cycle_max_;
    return lo + (cycle_max_ - lo) * u;
  }

  // Worst-case relative displacement bound for robot i over dt.
  double ReachBound(std::size_t i, double dt, double obstacle_reach,
                    const std::vector<Actuation>& all) const {
    auto own = [&](std::size_t k) {
      const double v = world_.robots[k].v;
      return v * dt + 0.5 * std::max(0.0, all[k].accel) * dt * dt;
    };
    double other = obstacle_reach;
    for (std::size_t k = 0; k < world_.robots.size(); ++k) {
      if (k != i) other = std::max(other, own(k));
    }
    return own(i) + other;
  }

  void Substep(const std::vector<Actuation>& actuation, double dt, int depth) {
    const std::size_t n = world_.robots.size();
    if (depth < kMaxBisections) {
      const double obstacle_reach = MaxObstacleDisplacement(world_, dt);
      for (std::size_t i = 0; i < n; ++i) {
        const double gap = Clearance(i, world_);
        if (gap > 0.0 && ReachBound(i, dt, obstacle_reach, actuation) >= gap) {
          Substep(actuation, 0.5 * dt, depth + 1);
          Substep(actuation, 0.5 * dt, depth + 1);
          return;
        }
      }
    }
    WorldState next = StepObstacles(world_, dt, pending_teleop_);
    pending_teleop_.clear();
    for (std::size_t i = 0; i < n; ++i) {
      next.robots[i] = IntegratePlant(world_.robots[i], actuation[i], dt);
    }
    next.time = world_.time + dt;
    world_ = std::move(next);

    for (std::size_t i = 0; i < n; ++i) {
      if (Clearance(i, world_) > 0.0) continue;
      // Keep the most severe contact of the cycle (highest speed).
      if (!events_[i] || world_.robots[i].v > events_[i]->v) {
        events_[i] = MakeRecord(i, Perceive(i));
      }
    }
  }

  void Finish(StopReason reason) {
    trace_.reason = reason;
    if (!trace_.records.empty() && trace_.records.back().t >= world_.time) {
      return;
    }
    // Final snapshot so the end state (and any contact in it) is recorded.
    for (std::size_t i = 0; i < world_.robots.size(); ++i) {
      trace_.records.push_back(MakeRecord(i, Perceive(i)));
    }
  }

  Scenario scenario_;
  WorldState world_;
  std::vector<WaypointPlan> plans_;
  std::vector<Command> commands_;
  std::vector<Perception> perceptions_;
  std::vector<std::optional<TraceRecord>> events_;
  TeleopInputs pending_teleop_;
  Trace trace_;
  std::mt19937_64 rng_;
  double cycle_max_ = 0.0;
  double substep_ = 0.0;
  std::size_t cycle_ = 0;
};

inline Trace Run(const Scenario& scenario) {
  Simulator sim(scenario);
  sim.Run();
  return sim.trace();
}

}  // namespace safeguard

#endif  // SAFEGUARD_SIM_H_
