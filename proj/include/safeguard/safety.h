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

#ifndef SAFEGUARD_SAFETY_H_
#define SAFEGUARD_SAFETY_H_

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string_view>

#include "safeguard/core.h"

// Certified velocity envelope. A robot that keeps `IsSafe` true at the start
// of every control cycle (and brakes at full power otherwise) can only be
// touched by an obstacle whose speed is bounded by V while it is at rest.
namespace safeguard {

enum class Mode { kDrive, kBrake };

constexpr std::string_view ModeName(Mode m) {
  return m == Mode::kDrive ? "Drive" : "Brake";
}

struct SafetyInput {
  double v = 0.0;  // current translational speed, >= 0
  double d = 0.0;  // distance to the closest obstacle point
};

// Right-hand side of the safe constraint: worst-case distance consumed by one
// full cycle at acceleration A followed by braking at b, with the obstacle
// closing at V the whole time.
inline double StoppingBudget(double v, const RobotParams& p) {
  const double a = p.accel_max;
  const double b = p.brake;
  const double eps = p.cycle_max;
  const double obs = p.obstacle_speed_max;
  return v * v / (2.0 * b) + obs * v / b +
         (a / b + 1.0) * (a / 2.0 * eps * eps + eps * (v + obs));
}

// Strict inequality; equality counts as unsafe.
inline bool IsSafe(const SafetyInput& in, const RobotParams& p) {
  return in.d / std::numbers::sqrt2 > StoppingBudget(in.v, p);
}

// Discriminant of the safe constraint written as a quadratic in v, scaled by
// 1/b^2. Negative only for d < 0.
inline double SafeSpeedRadicand(double d, const RobotParams& p) {
  const double ratio = p.accel_max / p.brake + 1.0;
  const double obs_over_b = p.obstacle_speed_max / p.brake;
  return ratio * p.cycle_max * p.cycle_max + obs_over_b * obs_over_b +
         std::numbers::sqrt2 * d / p.brake;
}

// Largest speed at distance `d` for which the safe constraint still holds
// (the constraint itself is strict, so the bound is a supremum). Clamped at 0.
inline double MaxSafeSpeed(double d, const RobotParams& p) {
  const double radicand = SafeSpeedRadicand(d, p);
  if (radicand < 0.0) return 0.0;
  const double ratio = p.accel_max / p.brake + 1.0;
  const double v = p.brake * std::sqrt(radicand) - p.obstacle_speed_max -
                   ratio * p.cycle_max * p.brake;
  return std::max(0.0, v);
}

// d/dd of the unclamped MaxSafeSpeed: (1/sqrt2) / sqrt(radicand).
inline double MaxSafeSpeedGradient(double d, const RobotParams& p) {
  const double radicand = SafeSpeedRadicand(d, p);
  if (!(radicand > 0.0)) {
    throw Error("MaxSafeSpeedGradient: non-positive radicand");
  }
  return (1.0 / std::numbers::sqrt2) / std::sqrt(radicand);
}

// Desired translational speed for the next cycle.
inline double DesiredSpeed(const SafetyInput& in, const RobotParams& p) {
  if (!IsSafe(in, p)) return 0.0;
  return std::max(0.0, MaxSafeSpeed(in.d, p) - p.velocity_margin +
                           p.accel_max * p.cycle_max);
}

// Drive/Brake automaton: every edge into Drive is guarded by the safe
// constraint; Brake is always reachable.
inline Mode StepMode(Mode /*current*/, const SafetyInput& in,
                     const RobotParams& p) {
  return IsSafe(in, p) ? Mode::kDrive : Mode::kBrake;
}

}  // namespace safeguard

#endif  // SAFEGUARD_SAFETY_H_
