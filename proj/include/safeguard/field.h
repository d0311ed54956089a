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

#ifndef SAFEGUARD_FIELD_H_
#define SAFEGUARD_FIELD_H_

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "safeguard/core.h"
#include "safeguard/safety.h"

namespace safeguard {

inline constexpr double kNoObstacle = std::numeric_limits<double>::infinity();

// What the controller sees in one cycle. `d` and `alpha` describe the
// globally closest obstacle point; `safety_d` and `static_d` split that set
// into obstacles that may move (budgeted at V) and obstacles trusted to be
// static (budgeted at zero speed).
struct Perception {
  double d = kNoObstacle;
  double alpha = 0.0;  // bearing from the closest obstacle point to the robot
  Vec2 closest_point;
  std::optional<double> beta;  // bearing from the robot to its active goal
  double theta = 0.0;
  double safety_d = kNoObstacle;
  double static_d = kNoObstacle;
  double stamp = 0.0;

  bool HasObstacle() const { return std::isfinite(d); }
};

struct ForceVec {
  Vec2 value;
  // Set when the force direction is undefined (goal coincident with robot).
  bool degenerate = false;

  double Magnitude() const { return value.Norm(); }
};

// Constant-magnitude pull towards the active goal.
inline ForceVec Attraction(const Perception& per, const FieldGains& g) {
  if (!per.beta) return {Vec2{}, true};
  return {UnitFromAngle(*per.beta) * g.k_att, false};
}

inline ForceVec Attraction(const Vec2& robot, const Vec2& goal,
                           const FieldGains& g) {
  const Vec2 delta = goal - robot;
  if (delta.x == 0.0 && delta.y == 0.0) return {Vec2{}, true};
  return {UnitFromAngle(AngleOf(delta)) * g.k_att, false};
}

// Magnitude of the repulsion gradient before the gain, after the optional cap.
inline double RepulsionGradient(double d, const FieldGains& g,
                                const RobotParams& p) {
  double grad = MaxSafeSpeedGradient(d, p);
  if (g.grad_cap) grad = std::min(grad, *g.grad_cap);
  return grad;
}

// Push along the gradient of the maximum safe speed, i.e. away from the
// closest obstacle point.
inline ForceVec Repulsion(const Perception& per, const FieldGains& g,
                          const RobotParams& p) {
  if (!per.HasObstacle()) return {};
  if (per.d < 0.0) throw Error("Repulsion: negative distance");
  const double magnitude = g.k_rep * RepulsionGradient(per.d, g, p);
  return {UnitFromAngle(per.alpha) * magnitude, false};
}

inline ForceVec TotalField(const Perception& per, const FieldGains& g,
                           const RobotParams& p) {
  const ForceVec att = Attraction(per, g);
  const ForceVec rep = Repulsion(per, g, p);
  return {att.value + rep.value, att.degenerate};
}

// Desired angular speed: turn towards the field direction at a rate
// proportional to the field strength, saturated at +/- omega_max.
inline double OmegaStar(const ForceVec& field, double theta,
                        const RobotParams& p) {
  const double magnitude = field.Magnitude();
  if (magnitude == 0.0) return 0.0;
  const double error = WrapAngle(AngleOf(field.value) - theta);
  return std::clamp(magnitude * error, -p.omega_max, p.omega_max);
}

// Classic attractive/repulsive potential field, kept as a baseline.
struct ClassicFieldParams {
  double eta = 1.0;        // repulsive gain
  double influence = 2.0;  // rho_0, m
  double k_att = 1.0;

  void Validate() const {
    if (!(eta > 0.0)) throw Error("ClassicFieldParams: eta must be > 0");
    if (!(influence > 0.0)) {
      throw Error("ClassicFieldParams: influence must be > 0");
    }
  }
};

// `obstacle_dir` points from the obstacle towards the robot; only its
// direction is used.
inline ForceVec ClassicApf(const Vec2& robot, const Vec2& goal, double rho,
                           const Vec2& obstacle_dir,
                           const ClassicFieldParams& cp) {
  cp.Validate();
  if (!(rho > 0.0)) throw Error("ClassicApf: rho must be > 0");
  Vec2 force = (robot - goal) * -cp.k_att;
  if (rho <= cp.influence) {
    const double n = obstacle_dir.Norm();
    if (n == 0.0) throw Error("ClassicApf: zero obstacle direction");
    const double mag = cp.eta * (1.0 / rho - 1.0 / cp.influence) / (rho * rho);
    force += obstacle_dir / n * mag;
  }
  return {force, false};
}

}  // namespace safeguard

#endif  // SAFEGUARD_FIELD_H_
