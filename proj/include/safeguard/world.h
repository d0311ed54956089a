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

#ifndef SAFEGUARD_WORLD_H_
#define SAFEGUARD_WORLD_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "safeguard/core.h"
#include "safeguard/field.h"
#include "safeguard/safety.h"

namespace safeguard {

struct Disc {
  Vec2 center;  // relative to the obstacle position
  double radius = 0.0;
};

// Convex polygon, vertices counter-clockwise, relative to the obstacle
// position.
struct Polygon {
  std::vector<Vec2> vertices;
};

using Shape = std::variant<Disc, Polygon>;

struct StaticMotion {};

// Piecewise-linear path through `path`, segment i driven at `speeds[i]`.
struct ScriptedMotion {
  std::vector<Vec2> path;
  std::vector<double> speeds;
  bool loop = false;
  std::size_t next = 0;  // index of the waypoint being approached
};

// Heads straight for the centre of robot `target`.
struct PursuitMotion {
  std::size_t target = 0;
  double speed = 0.0;
};

// Velocity set externally; holds the latest command until replaced.
struct TeleopMotion {
  Vec2 velocity;
};

using Motion =
    std::variant<StaticMotion, ScriptedMotion, PursuitMotion, TeleopMotion>;

struct Obstacle {
  Shape shape;
  Vec2 position;
  Motion motion = StaticMotion{};
  double speed_limit = 0.0;
  // Trusted never to move; the safety check budgets it at zero speed.
  bool static_trust = false;

  bool IsStatic() const { return std::holds_alternative<StaticMotion>(motion); }
};

struct RobotState {
  Pose pose;
  double v = 0.0;
  double omega = 0.0;
  Mode mode = Mode::kBrake;
};

struct WorldState {
  double time = 0.0;
  std::vector<RobotState> robots;
  std::vector<double> robot_radii;  // parallel to `robots`
  std::vector<Obstacle> obstacles;
};

// Obstacle command inputs keyed by obstacle index.
using TeleopInputs = std::map<std::size_t, Vec2>;

struct SensorOptions {
  double max_range = std::numeric_limits<double>::infinity();
};

namespace geometry {

struct SurfacePoint {
  Vec2 point;
  double signed_distance = 0.0;  // negative inside the shape
};

inline Vec2 ClosestOnSegment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.SquaredNorm();
  if (len2 == 0.0) return a;
  const double t = std::clamp((p - a).Dot(ab) / len2, 0.0, 1.0);
  return a + ab * t;
}

inline SurfacePoint ClosestOnDisc(const Vec2& p, const Vec2& center,
                                  double radius) {
  const Vec2 delta = p - center;
  const double dist = delta.Norm();
  const Vec2 dir = dist > 0.0 ? delta / dist : Vec2{1.0, 0.0};
  return {center + dir * radius, dist - radius};
}

inline bool InsideConvex(const Vec2& p, const std::vector<Vec2>& verts) {
  const std::size_t n = verts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = verts[i];
    const Vec2& b = verts[(i + 1) % n];
    if ((b - a).Cross(p - a) < 0.0) return false;
  }
  return true;
}

inline SurfacePoint ClosestOnPolygon(const Vec2& p,
                                     const std::vector<Vec2>& verts) {
  SurfacePoint best{verts.front(), std::numeric_limits<double>::infinity()};
  const std::size_t n = verts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 q = ClosestOnSegment(p, verts[i], verts[(i + 1) % n]);
    const double dist = (p - q).Norm();
    if (dist < best.signed_distance) best = {q, dist};
  }
  if (InsideConvex(p, verts)) best.signed_distance = -best.signed_distance;
  return best;
}

inline SurfacePoint ClosestOnShape(const Vec2& p, const Shape& shape,
                                   const Vec2& offset) {
  return std::visit(
      [&](const auto& s) -> SurfacePoint {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disc>) {
          return ClosestOnDisc(p, s.center + offset, s.radius);
        } else {
          std::vector<Vec2> world(s.vertices.size());
          std::transform(s.vertices.begin(), s.vertices.end(), world.begin(),
                         [&](const Vec2& v) { return v + offset; });
          return ClosestOnPolygon(p, world);
        }
      },
      shape);
}

inline double SignedArea(const std::vector<Vec2>& verts) {
  double area = 0.0;
  for (std::size_t i = 0; i < verts.size(); ++i) {
    area += verts[i].Cross(verts[(i + 1) % verts.size()]);
  }
  return 0.5 * area;
}

inline Vec2 Centroid(const std::vector<Vec2>& verts) {
  Vec2 sum;
  for (const Vec2& v : verts) sum += v;
  return sum / static_cast<double>(verts.size());
}

// Returns the vertices in counter-clockwise order; throws unless the polygon
// is convex with non-zero area and no repeated vertices.
inline std::vector<Vec2> NormalizeConvex(std::vector<Vec2> verts) {
  if (verts.size() < 3) throw Error("polygon needs at least 3 vertices");
  for (const Vec2& v : verts) {
    if (!v.IsFinite()) throw Error("polygon vertex is not finite");
  }
  const double area = SignedArea(verts);
  if (std::abs(area) < 1e-12) throw Error("polygon is degenerate");
  if (area < 0.0) std::reverse(verts.begin(), verts.end());
  const std::size_t n = verts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = verts[i];
    const Vec2& b = verts[(i + 1) % n];
    const Vec2& c = verts[(i + 2) % n];
    if ((b - a).SquaredNorm() == 0.0) throw Error("polygon repeats a vertex");
    if ((b - a).Cross(c - b) < 0.0) throw Error("polygon is not convex");
  }
  return verts;
}

}  // namespace geometry

// Nearest surface point of anything other than robot `self`, with its signed
// clearance to the robot's body (negative means overlap). Ties go to the
// lower obstacle index, obstacles before robots.
struct Contact {
  Vec2 point;
  double clearance = std::numeric_limits<double>::infinity();
  bool from_static_trusted = false;
  bool found = false;
};

struct ContactSummary {
  Contact nearest;         // over everything
  Contact nearest_moving;  // excluding trusted-static obstacles
  Contact nearest_static;  // trusted-static obstacles only
};

inline ContactSummary FindContacts(std::size_t self, const WorldState& world) {
  ContactSummary out;
  const Vec2 p = world.robots.at(self).pose.position;
  const double own_radius = world.robot_radii.at(self);
  auto offer = [](Contact& slot, const Vec2& q, double clearance,
                  bool trusted) {
    if (!slot.found || clearance < slot.clearance) {
      slot = {q, clearance, trusted, true};
    }
  };
  for (const Obstacle& obs : world.obstacles) {
    const auto sp = geometry::ClosestOnShape(p, obs.shape, obs.position);
    const double clearance = sp.signed_distance - own_radius;
    offer(out.nearest, sp.point, clearance, obs.static_trust);
    if (obs.static_trust) {
      offer(out.nearest_static, sp.point, clearance, true);
    } else {
      offer(out.nearest_moving, sp.point, clearance, false);
    }
  }
  for (std::size_t i = 0; i < world.robots.size(); ++i) {
    if (i == self) continue;
    const auto sp = geometry::ClosestOnDisc(p, world.robots[i].pose.position,
                                            world.robot_radii.at(i));
    const double clearance = sp.signed_distance - own_radius;
    offer(out.nearest, sp.point, clearance, false);
    offer(out.nearest_moving, sp.point, clearance, false);
  }
  return out;
}

// Signed clearance between robot `self` and the nearest other body.
inline double Clearance(std::size_t self, const WorldState& world) {
  return FindContacts(self, world).nearest.clearance;
}

// Idealized omnidirectional range sensor. Distances are reduced by the robot
// radius and floored at zero; anything beyond `max_range` is invisible.
inline Perception ClosestObstaclePoint(std::size_t self,
                                       const WorldState& world,
                                       std::optional<Vec2> goal,
                                       const SensorOptions& sensor = {}) {
  const RobotState& robot = world.robots.at(self);
  const Vec2 p = robot.pose.position;
  Perception per;
  per.theta = robot.pose.theta;
  per.stamp = world.time;
  if (goal) {
    const Vec2 to_goal = *goal - p;
    if (to_goal.x != 0.0 || to_goal.y != 0.0) per.beta = AngleOf(to_goal);
  }

  const ContactSummary contacts = FindContacts(self, world);
  auto visible = [&](const Contact& c) {
    return c.found && c.clearance <= sensor.max_range;
  };
  if (visible(contacts.nearest_moving)) {
    per.safety_d = std::max(0.0, contacts.nearest_moving.clearance);
  }
  if (visible(contacts.nearest_static)) {
    per.static_d = std::max(0.0, contacts.nearest_static.clearance);
  }
  if (!visible(contacts.nearest)) return per;

  per.d = std::max(0.0, contacts.nearest.clearance);
  per.closest_point = contacts.nearest.point;
  const Vec2 away = p - contacts.nearest.point;
  if (away.x != 0.0 || away.y != 0.0) {
    per.alpha = AngleOf(away);
    // Centre inside a polygon: the boundary point lies ahead of the centre,
    // so the outward direction is the reverse.
    if (contacts.nearest.clearance + world.robot_radii[self] < 0.0) {
      per.alpha = WrapAngle(per.alpha + kPi);
    }
  }
  return per;
}

namespace detail {

inline Vec2 LimitSpeed(const Vec2& velocity, double limit) {
  const double speed = velocity.Norm();
  if (speed <= limit || speed == 0.0) return velocity;
  return velocity * (limit / speed);
}

inline void AdvanceScripted(Obstacle& obs, ScriptedMotion& m, double dt) {
  double remaining = dt;
  // A looping path of coincident points would otherwise never consume time.
  std::size_t idle_hops = 0;
  while (remaining > 0.0 && !m.path.empty() && m.next < m.path.size() &&
         idle_hops <= m.path.size()) {
    const std::size_t seg = m.next == 0 ? 0 : m.next - 1;
    const double speed = std::min(
        m.speeds.empty() ? 0.0 : m.speeds[std::min(seg, m.speeds.size() - 1)],
        obs.speed_limit);
    if (speed <= 0.0) break;
    const Vec2 to_target = m.path[m.next] - obs.position;
    const double dist = to_target.Norm();
    const double reach = speed * remaining;
    if (reach < dist) {
      obs.position += to_target * (reach / dist);
      remaining = 0.0;
    } else {
      obs.position = m.path[m.next];
      remaining -= dist / speed;
      idle_hops = dist > 0.0 ? 0 : idle_hops + 1;
      ++m.next;
      if (m.next == m.path.size() && m.loop) m.next = 0;
    }
  }
}

}  // namespace detail

// Advances every obstacle by `dt`. Speeds never exceed the obstacle's
// speed_limit. Teleop inputs replace the held velocity of the addressed
// obstacles (inputs for non-teleop obstacles are ignored).
inline WorldState StepObstacles(const WorldState& world, double dt,
                                const TeleopInputs& teleop = {}) {
  if (!(dt > 0.0)) throw Error("StepObstacles: dt must be > 0");
  WorldState next = world;
  for (std::size_t i = 0; i < next.obstacles.size(); ++i) {
    Obstacle& obs = next.obstacles[i];
    std::visit(
        [&](auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, ScriptedMotion>) {
            detail::AdvanceScripted(obs, m, dt);
          } else if constexpr (std::is_same_v<T, PursuitMotion>) {
            if (m.target >= next.robots.size()) return;
            const Vec2 target = world.robots[m.target].pose.position;
            const Vec2 delta = target - obs.position;
            const double dist = delta.Norm();
            const double step = std::min({m.speed, obs.speed_limit}) * dt;
            if (dist <= 0.0 || step <= 0.0) return;
            obs.position += delta * (std::min(step, dist) / dist);
          } else if constexpr (std::is_same_v<T, TeleopMotion>) {
            if (auto it = teleop.find(i); it != teleop.end()) {
              m.velocity = it->second.IsFinite() ? it->second : Vec2{};
            }
            m.velocity = detail::LimitSpeed(m.velocity, obs.speed_limit);
            obs.position += m.velocity * dt;
          }
        },
        obs.motion);
  }
  return next;
}

// Upper bound on how far any obstacle may move in `dt`.
inline double MaxObstacleDisplacement(const WorldState& world, double dt) {
  double bound = 0.0;
  for (const Obstacle& obs : world.obstacles) {
    if (!obs.IsStatic()) bound = std::max(bound, obs.speed_limit * dt);
  }
  return bound;
}

}  // namespace safeguard

#endif  // SAFEGUARD_WORLD_H_
