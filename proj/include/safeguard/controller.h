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

#ifndef SAFEGUARD_CONTROLLER_H_
#define SAFEGUARD_CONTROLLER_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "safeguard/core.h"
#include "safeguard/field.h"
#include "safeguard/safety.h"
#include "safeguard/world.h"

namespace safeguard {

struct Command {
  double v_star = 0.0;
  double omega_star = 0.0;
  Mode mode = Mode::kBrake;
  double timestamp = 0.0;
  // Total field nearly cancelled away from the goal.
  bool local_minimum = false;
};

struct WaypointPlan {
  std::vector<Vec2> waypoints;
  double arrival_tolerance = 0.3;
  std::size_t active_index = 0;
  bool complete = false;

  void Validate() const {
    if (waypoints.empty()) throw Error("WaypointPlan: no waypoints");
    if (!(arrival_tolerance > 0.0)) {
      throw Error("WaypointPlan: arrival_tolerance must be > 0");
    }
    if (active_index >= waypoints.size()) {
      throw Error("WaypointPlan: active_index out of range");
    }
  }

  const Vec2& ActiveWaypoint() const { return waypoints.at(active_index); }
};

// Moves on to the next waypoint once the active one is within tolerance. At
// most one waypoint is consumed per call, so the last one is never skipped.
inline WaypointPlan AdvanceWaypoint(WaypointPlan plan, const Vec2& position) {
  if (plan.complete || plan.waypoints.empty()) return plan;
  if ((plan.ActiveWaypoint() - position).Norm() > plan.arrival_tolerance) {
    return plan;
  }
  if (plan.active_index + 1 < plan.waypoints.size()) {
    ++plan.active_index;
  } else {
    plan.complete = true;
  }
  return plan;
}

// Speed from which the robot can still brake to a stop on the final
// waypoint. Only ever lowers v*, so safety is unaffected.
inline double GoalApproachSpeed(const RobotState& state,
                                const WaypointPlan& plan,
                                const RobotParams& params) {
  const double dist = (plan.ActiveWaypoint() - state.pose.position).Norm();
  return std::sqrt(2.0 * params.brake * dist);
}

// |F| below this fraction of k_att with an obstacle in view is reported as a
// local minimum of the field.
inline constexpr double kLocalMinimumFraction = 0.05;

// One SafeGuardPF control cycle: the Drive/Brake automaton decides the mode,
// the speed envelope gives v*, and the potential field gives omega*.
// Pure function of its arguments.
inline Command ControlCycle(const RobotState& state, const Perception& per,
                            const WaypointPlan& plan, const FieldGains& gains,
                            const RobotParams& params, double now) {
  if (now - per.stamp > params.cycle_max) {
    throw Error("ControlCycle: stale perception");
  }
  RobotParams trusted = params;
  trusted.obstacle_speed_max = 0.0;
  const SafetyInput moving_in{state.v, per.safety_d};
  const SafetyInput static_in{state.v, per.static_d};

  Command cmd;
  cmd.timestamp = now;
  const bool safe = IsSafe(moving_in, params) && IsSafe(static_in, trusted);
  cmd.mode = safe ? Mode::kDrive : Mode::kBrake;
  if (safe && !plan.complete) {
    cmd.v_star = std::min(DesiredSpeed(moving_in, params),
                          DesiredSpeed(static_in, trusted));
    if (plan.active_index + 1 == plan.waypoints.size()) {
      cmd.v_star = std::min(cmd.v_star, GoalApproachSpeed(state, plan, params));
    }
  }

  if (!plan.complete) {
    const ForceVec field = TotalField(per, gains, params);
    cmd.omega_star = OmegaStar(field, state.pose.theta, params);
    cmd.local_minimum = per.HasObstacle() && !field.degenerate &&
                        field.Magnitude() < kLocalMinimumFraction * gains.k_att;
  }
  return cmd;
}

}  // namespace safeguard

#endif  // SAFEGUARD_CONTROLLER_H_
