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

#ifndef SAFEGUARD_CORE_H_
#define SAFEGUARD_CORE_H_

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

namespace safeguard {

inline constexpr double kPi = std::numbers::pi;

// Thrown for contract violations on public entry points (bad parameters,
// non-finite inputs, malformed scenarios).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2() = default;
  constexpr Vec2(double x_in, double y_in) : x(x_in), y(y_in) {}

  constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  constexpr Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2& operator-=(const Vec2& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  constexpr bool operator==(const Vec2&) const = default;

  constexpr double Dot(const Vec2& o) const { return x * o.x + y * o.y; }
  constexpr double Cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double Norm() const { return std::hypot(x, y); }
  constexpr double SquaredNorm() const { return x * x + y * y; }
  bool IsFinite() const { return std::isfinite(x) && std::isfinite(y); }
};

constexpr Vec2 operator*(double s, const Vec2& v) { return v * s; }

// Out of line on purpose: compilers may fuse a sin/cos pair into a single
// sincos call in some inlined copies but not others, and glibc's sincos can
// differ from sin in the last bit. One copy keeps results bit-identical
// across call sites.
[[gnu::noinline]] inline Vec2 UnitFromAngle(double angle) {
  return {std::cos(angle), std::sin(angle)};
}

// Maps any finite angle onto (-pi, pi].
inline double WrapAngle(double angle) {
  if (!std::isfinite(angle)) {
    throw Error("WrapAngle: non-finite angle");
  }
  double wrapped = std::remainder(angle, 2.0 * kPi);
  if (wrapped <= -kPi) wrapped += 2.0 * kPi;
  return wrapped;
}

// Direction of `v` in (-pi, pi]. The zero vector has no direction.
inline double AngleOf(const Vec2& v) {
  if (!v.IsFinite()) throw Error("AngleOf: non-finite vector");
  if (v.x == 0.0 && v.y == 0.0) throw Error("AngleOf: zero vector");
  double angle = std::atan2(v.y, v.x);
  // atan2(-0.0, negative) yields -pi.
  if (angle <= -kPi) angle = kPi;
  return angle;
}

struct Pose {
  Vec2 position;
  double theta = 0.0;
};

// Physical limits of the robot and the assumptions the safety envelope is
// certified under. All values SI.
struct RobotParams {
  double accel_max = 0.3;            // A, m/s^2
  double brake = 0.3;                // b, m/s^2
  double omega_max = 1.0;            // Omega, rad/s
  double cycle_max = 0.1;            // epsilon, s
  double obstacle_speed_max = 0.75;  // V, m/s
  double velocity_margin = 0.01;     // delta, m/s
  double radius = 0.0;               // robot body radius, m

  void Validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(accel_max) || !finite(brake) || !finite(omega_max) ||
        !finite(cycle_max) || !finite(obstacle_speed_max) ||
        !finite(velocity_margin) || !finite(radius)) {
      throw Error("RobotParams: non-finite value");
    }
    if (!(brake > 0.0)) throw Error("RobotParams: brake must be > 0");
    if (accel_max < 0.0) throw Error("RobotParams: accel_max must be >= 0");
    if (omega_max < 0.0) throw Error("RobotParams: omega_max must be >= 0");
    if (!(cycle_max > 0.0)) throw Error("RobotParams: cycle_max must be > 0");
    if (obstacle_speed_max < 0.0) {
      throw Error("RobotParams: obstacle_speed_max must be >= 0");
    }
    if (!(velocity_margin > 0.0)) {
      throw Error("RobotParams: velocity_margin must be > 0");
    }
    if (radius < 0.0) throw Error("RobotParams: radius must be >= 0");
  }
};

struct FieldGains {
  double k_att = 0.25;
  double k_rep = 1.0;
  // Saturation for the repulsion gradient magnitude; unset means uncapped.
  std::optional<double> grad_cap;

  void Validate() const {
    if (!(k_att > 0.0) || !std::isfinite(k_att)) {
      throw Error("FieldGains: k_att must be > 0");
    }
    if (!(k_rep > 0.0) || !std::isfinite(k_rep)) {
      throw Error("FieldGains: k_rep must be > 0");
    }
    if (grad_cap && !(*grad_cap > 0.0)) {
      throw Error("FieldGains: grad_cap must be > 0 when set");
    }
  }
};

}  // namespace safeguard

#endif  // SAFEGUARD_CORE_H_
