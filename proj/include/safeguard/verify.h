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

#ifndef SAFEGUARD_VERIFY_H_
#define SAFEGUARD_VERIFY_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "safeguard/core.h"
#include "safeguard/safety.h"
#include "safeguard/scenario.h"
#include "safeguard/sim.h"
#include "safeguard/world.h"

// Independent checks of the closed forms and of the passive-safety property.
// Nothing here uses the closed-form MaxSafeSpeed except where a check
// explicitly compares against it.
namespace safeguard::verify {

// Largest v with IsSafe({v, d}) by bisection on the predicate alone.
inline double BisectMaxSafeSpeed(double d, const RobotParams& p) {
  if (!IsSafe({0.0, d}, p)) return 0.0;
  const double b = p.brake;
  const double obs = p.obstacle_speed_max;
  double lo = 0.0;
  double hi = b * (1.0 + std::sqrt(2.0 + obs * obs / (b * b) +
                                   2.0 * std::max(d, 0.0) / b)) +
              obs;
  while (IsSafe({hi, d}, p)) hi *= 2.0;
  for (int i = 0; i < 400 && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (IsSafe({mid, d}, p) ? lo : hi) = mid;
  }
  return lo;
}

inline double FiniteDiffGradient(double d, const RobotParams& p, double h) {
  if (!(h > 0.0)) throw Error("FiniteDiffGradient: h must be > 0");
  if (d - h < 0.0) throw Error("FiniteDiffGradient: d - h must be >= 0");
  return (MaxSafeSpeed(d + h, p) - MaxSafeSpeed(d - h, p)) / (2.0 * h);
}

struct BrakeVerdict {
  bool pass = true;
  double min_separation = 0.0;
  double stop_time = 0.0;
};

// Time-steps the worst case the envelope budgets for: the robot keeps
// accelerating at A for one full cycle, then brakes at b, while an obstacle
// closes head-on at V along the line of sight. Passes iff the separation
// (starting at the Euclidean distance d) stays positive until the robot is
// at rest. A robot already at rest passes.
inline BrakeVerdict WorstCaseBrakeCheck(const RobotState& state, double d,
                                        const RobotParams& p,
                                        double dt = 1e-3) {
  BrakeVerdict out;
  out.min_separation = d;
  if (state.v <= 0.0) return out;
  double t = 0.0;
  double v = state.v;
  double sep = d;
  const double obs = p.obstacle_speed_max;
  while (v > 0.0) {
    const bool driving = t < p.cycle_max;
    const double accel = driving ? p.accel_max : -p.brake;
    double step = driving ? std::min(dt, p.cycle_max - t) : dt;
    bool stops = false;
    if (accel < 0.0 && step >= v / -accel) {
      step = v / -accel;
      stops = true;
    }
    sep -= v * step + 0.5 * accel * step * step + obs * step;
    v = stops ? 0.0 : v + accel * step;
    t += step;
    out.min_separation = std::min(out.min_separation, sep);
    if (sep <= 0.0) {
      out.pass = false;
      break;
    }
  }
  out.stop_time = t;
  return out;
}

// ---------------------------------------------------------------------------
// Fuzzing

struct ParamRange {
  double lo = 0.0;
  double hi = 0.0;
};

struct FuzzOptions {
  std::size_t runs = 1000;
  std::uint64_t seed = 1;
  // Draw robot parameters from the ranges below instead of `base_params`.
  bool randomize_params = false;
  // Obstacles move at twice the robot's assumed V.
  bool breach_assumptions = false;
  double duration = 30.0;
  std::size_t drive_samples_per_run = 50;
  unsigned threads = 0;  // 0 = hardware concurrency

  RobotParams base_params{0.3, 0.3, 1.0, 0.1, 0.75, 0.01, 0.25};
  ParamRange brake{0.05, 2.0};
  ParamRange accel{0.0, 2.0};
  ParamRange cycle{0.01, 0.5};
  ParamRange obstacle_speed{0.0, 2.0};
  ParamRange radius{0.0, 0.4};
  ParamRange arena_half{4.0, 8.0};
};

struct FuzzFailure {
  std::uint64_t seed = 0;
  std::size_t first_violation_record = 0;
  std::string label;  // "violation" or "assumption-violated"
};

struct DriveSample {
  std::uint64_t seed = 0;
  double v = 0.0;
  double d = 0.0;
  RobotParams params;
};

struct FuzzReport {
  std::size_t runs = 0;
  std::vector<FuzzFailure> failures;
  std::vector<DriveSample> drive_samples;
  std::size_t collisions_at_rest = 0;
  FuzzOptions options;

  // Failures that are not explained by an intentional assumption breach.
  std::size_t GenuineFailures() const {
    return static_cast<std::size_t>(std::count_if(
        failures.begin(), failures.end(),
        [](const FuzzFailure& f) { return f.label == "violation"; }));
  }
};

inline std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t RunSeed(std::uint64_t seed, std::size_t index) {
  return SplitMix64(seed ^ SplitMix64(static_cast<std::uint64_t>(index)));
}

namespace fuzz_detail {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t Next() {
    state_ += 0x9E3779B97F4A7C15ull;
    return SplitMix64(state_);
  }
  double Uniform(double lo, double hi) {
    const double u = static_cast<double>(Next() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }
  double Uniform(const ParamRange& r) { return Uniform(r.lo, r.hi); }
  std::size_t Index(std::size_t n) {
    return static_cast<std::size_t>(Next() % n);
  }

 private:
  std::uint64_t state_;
};

inline Shape RandomShape(Rng& rng) {
  switch (rng.Index(3)) {
    case 0:
      return Disc{{0.0, 0.0}, rng.Uniform(0.15, 0.8)};
    case 1: {
      const double hx = rng.Uniform(0.1, 1.0), hy = rng.Uniform(0.1, 1.0);
      return Polygon{{{-hx, -hy}, {hx, -hy}, {hx, hy}, {-hx, hy}}};
    }
    default: {
      const double r = rng.Uniform(0.3, 1.0);
      const double phase = rng.Uniform(0.0, 2.0 * kPi);
      std::vector<Vec2> v;
      for (int k = 0; k < 3; ++k) {
        v.push_back(UnitFromAngle(phase + 2.0 * kPi * k / 3.0) * r);
      }
      return Polygon{geometry::NormalizeConvex(std::move(v))};
    }
  }
}

}  // namespace fuzz_detail

// Builds the randomized scenario for one fuzz run. Deterministic in
// (run_seed, options).
inline Scenario FuzzScenario(std::uint64_t run_seed, const FuzzOptions& opt) {
  fuzz_detail::Rng rng(run_seed);
  RobotParams params = opt.base_params;
  if (opt.randomize_params) {
    params.brake = rng.Uniform(opt.brake);
    params.accel_max = rng.Uniform(opt.accel);
    params.cycle_max = rng.Uniform(opt.cycle);
    params.obstacle_speed_max = rng.Uniform(opt.obstacle_speed);
    params.radius = rng.Uniform(opt.radius);
  }
  const double half = rng.Uniform(opt.arena_half);
  Arena arena{{-half, -half}, 2.0 * half, 2.0 * half};
  const double obstacle_speed = opt.breach_assumptions
                                    ? 2.0 * params.obstacle_speed_max
                                    : params.obstacle_speed_max;

  Scenario sc;
  sc.arena = arena;
  sc.allow_assumption_breach = opt.breach_assumptions;
  sc.sim.duration = opt.duration;
  sc.sim.jitter = JitterPolicy::kUniform;
  sc.sim.seed = rng.Next();
  sc.obstacles = ArenaWalls(arena, 0.2, obstacle_speed);

  RobotSpec robot;
  robot.params = params;
  robot.gains.k_att = rng.Uniform(0.02, 0.5);
  robot.gains.k_rep = rng.Uniform(0.05, 1.5);
  const double margin = params.radius + 0.3;
  auto random_point = [&]() {
    return Vec2{rng.Uniform(-half + margin, half - margin),
                rng.Uniform(-half + margin, half - margin)};
  };
  robot.spawn = {random_point(), rng.Uniform(-kPi, kPi)};
  const std::size_t n_wp = 1 + rng.Index(3);
  for (std::size_t k = 0; k < n_wp; ++k) {
    robot.plan.waypoints.push_back(random_point());
  }
  sc.robots.push_back(robot);

  const std::size_t n_obs = 1 + rng.Index(8);
  for (std::size_t k = 0; k < n_obs; ++k) {
    for (int attempt = 0; attempt < 50; ++attempt) {
      Obstacle obs;
      obs.shape = fuzz_detail::RandomShape(rng);
      obs.position = random_point();
      obs.speed_limit = obstacle_speed;
      const std::size_t kind = rng.Index(4);
      if (kind == 0) {
        obs.motion = StaticMotion{};
      } else if (kind == 1) {
        ScriptedMotion m;
        const std::size_t n_path = 2 + rng.Index(3);
        for (std::size_t w = 0; w < n_path; ++w)
          m.path.push_back(random_point());
        m.speeds = {rng.Uniform(0.0, obstacle_speed)};
        m.loop = true;
        obs.motion = m;
      } else {
        obs.motion = PursuitMotion{0, obstacle_speed};
      }
      // Spawn clear of the robot, and static obstacles clear of waypoints.
      const auto at_robot = geometry::ClosestOnShape(robot.spawn.position,
                                                     obs.shape, obs.position);
      bool ok = at_robot.signed_distance > params.radius + 0.3;
      if (ok && obs.IsStatic()) {
        for (const Vec2& wp : robot.plan.waypoints) {
          if (geometry::ClosestOnShape(wp, obs.shape, obs.position)
                  .signed_distance <= params.radius + 0.05) {
            ok = false;
          }
        }
      }
      if (ok) {
        sc.obstacles.push_back(std::move(obs));
        break;
      }
    }
  }
  ValidateScenario(sc);
  return sc;
}

struct FuzzRunResult {
  std::uint64_t seed = 0;
  SafetyVerdict verdict;
  std::size_t collisions_at_rest = 0;
  std::vector<DriveSample> drive_samples;
};

inline FuzzRunResult FuzzOne(std::uint64_t run_seed, const FuzzOptions& opt) {
  const Scenario sc = FuzzScenario(run_seed, opt);
  const Trace trace = Run(sc);
  FuzzRunResult out;
  out.seed = run_seed;
  out.verdict = CheckPassiveSafety(trace);
  std::vector<const TraceRecord*> drive;
  for (const TraceRecord& r : trace.records) {
    if (r.collision && r.v <= kRestSpeed) ++out.collisions_at_rest;
    if (r.mode == Mode::kDrive && std::isfinite(r.d)) drive.push_back(&r);
  }
  const std::size_t want = std::min(opt.drive_samples_per_run, drive.size());
  for (std::size_t k = 0; k < want; ++k) {
    const TraceRecord* r = drive[k * drive.size() / want];
    out.drive_samples.push_back({run_seed, r->v, r->d, sc.robots[0].params});
  }
  return out;
}

// Runs `opt.runs` seeded scenarios and aggregates passive-safety verdicts.
// Results are independent of the thread count.
inline FuzzReport FuzzPassiveSafety(const FuzzOptions& opt) {
  if (opt.runs == 0) throw Error("FuzzPassiveSafety: runs must be > 0");
  std::vector<FuzzRunResult> results(opt.runs);
  unsigned threads =
      opt.threads ? opt.threads : std::thread::hardware_concurrency();
  threads = std::max(
      1u, std::min<unsigned>(threads, static_cast<unsigned>(opt.runs)));
  auto work = [&](unsigned worker) {
    for (std::size_t i = worker; i < opt.runs; i += threads) {
      results[i] = FuzzOne(RunSeed(opt.seed, i), opt);
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }

  FuzzReport report;
  report.runs = opt.runs;
  report.options = opt;
  for (FuzzRunResult& r : results) {
    report.collisions_at_rest += r.collisions_at_rest;
    if (!r.verdict.pass) {
      report.failures.push_back(
          {r.seed, *r.verdict.first_violation,
           opt.breach_assumptions ? "assumption-violated" : "violation"});
    }
    for (DriveSample& s : r.drive_samples) report.drive_samples.push_back(s);
  }
  return report;
}

inline nlohmann::ordered_json FuzzReportToJson(const FuzzReport& report) {
  using nlohmann::ordered_json;
  const FuzzOptions& o = report.options;
  auto range = [](const ParamRange& r) {
    return ordered_json::array({r.lo, r.hi});
  };
  ordered_json ranges;
  if (o.randomize_params) {
    ranges["brake"] = range(o.brake);
    ranges["accel_max"] = range(o.accel);
    ranges["cycle_max"] = range(o.cycle);
    ranges["obstacle_speed_max"] = range(o.obstacle_speed);
    ranges["radius"] = range(o.radius);
  } else {
    const RobotParams& p = o.base_params;
    ranges["brake"] = range({p.brake, p.brake});
    ranges["accel_max"] = range({p.accel_max, p.accel_max});
    ranges["cycle_max"] = range({p.cycle_max, p.cycle_max});
    ranges["obstacle_speed_max"] =
        range({p.obstacle_speed_max, p.obstacle_speed_max});
    ranges["radius"] = range({p.radius, p.radius});
  }
  ranges["omega_max"] =
      range({o.base_params.omega_max, o.base_params.omega_max});
  ranges["velocity_margin"] =
      range({o.base_params.velocity_margin, o.base_params.velocity_margin});
  ranges["arena_half_width"] = range(o.arena_half);
  ranges["obstacle_count"] = ordered_json::array({1, 8});
  ranges["k_att"] = ordered_json::array({0.02, 0.5});
  ranges["k_rep"] = ordered_json::array({0.05, 1.5});
  ranges["duration"] = o.duration;

  ordered_json failures = ordered_json::array();
  for (const FuzzFailure& f : report.failures) {
    failures.push_back({{"seed", f.seed},
                        {"first_violation_record", f.first_violation_record},
                        {"label", f.label}});
  }
  ordered_json j;
  j["runs"] = report.runs;
  j["seed"] = o.seed;
  j["breach_assumptions"] = o.breach_assumptions;
  j["failures"] = failures;
  j["collisions_at_rest"] = report.collisions_at_rest;
  j["param_ranges"] = ranges;
  return j;
}

}  // namespace safeguard::verify

#endif  // SAFEGUARD_VERIFY_H_
