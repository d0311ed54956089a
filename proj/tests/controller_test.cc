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

#include "safeguard/controller.h"

#include <cmath>
#include <random>

#include "gtest/gtest.h"

namespace safeguard {
namespace {

Perception See(double d, double alpha, std::optional<double> beta) {
  Perception per;
  per.d = d;
  per.safety_d = d;
  per.alpha = alpha;
  per.beta = beta;
  return per;
}

WaypointPlan PlanTo(Vec2 goal) { return WaypointPlan{{goal}}; }

RobotState At(double v, double theta = 0.0) {
  RobotState s;
  s.v = v;
  s.pose.theta = theta;
  return s;
}

TEST(ControlCycleTest, UnsafeBrakes) {
  const Command c = ControlCycle(At(1.0), See(0.5, kPi, 0.0), PlanTo({5, 0}),
                                 FieldGains{}, RobotParams{}, 0.0);
  EXPECT_EQ(c.mode, Mode::kBrake);
  EXPECT_EQ(c.v_star, 0.0);
}

TEST(ControlCycleTest, OpenSpaceGoalAhead) {
  const Command c =
      ControlCycle(At(0.0), See(kNoObstacle, 0.0, 0.0), PlanTo({5, 0}),
                   FieldGains{}, RobotParams{}, 0.0);
  EXPECT_EQ(c.mode, Mode::kDrive);
  EXPECT_GT(c.v_star, 0.0);
  EXPECT_NEAR(c.omega_star, 0.0, 1e-15);
  EXPECT_FALSE(c.local_minimum);
}

TEST(ControlCycleTest, SpeedGrowsAwayFromWall) {
  double prev = -1.0;
  for (double d = 0.2; d < 3.0; d += 0.1) {
    const Command c = ControlCycle(At(0.0), See(d, kPi, 0.0), PlanTo({5, 0}),
                                   FieldGains{}, RobotParams{}, 0.0);
    EXPECT_GE(c.v_star, prev);
    prev = c.v_star;
  }
  EXPECT_GT(prev, 0.0);
}

TEST(ControlCycleTest, StalePerceptionRejected) {
  Perception per = See(2.0, 0.0, 0.0);
  per.stamp = 0.0;
  EXPECT_THROW(ControlCycle(At(0.0), per, PlanTo({5, 0}), FieldGains{},
                            RobotParams{}, 0.2),
               Error);
}

TEST(ControlCycleTest, CompletePlanStops) {
  WaypointPlan plan = PlanTo({0, 0});
  plan.complete = true;
  const Command c = ControlCycle(At(0.3), See(5.0, 0.0, std::nullopt), plan,
                                 FieldGains{}, RobotParams{}, 0.0);
  EXPECT_EQ(c.v_star, 0.0);
  EXPECT_EQ(c.omega_star, 0.0);
}

TEST(ControlCycleTest, TrustedStaticBudgetedAtZeroSpeed) {
  Perception per = See(1.0, kPi, 0.0);
  per.safety_d = kNoObstacle;
  per.static_d = 1.0;
  RobotParams still = RobotParams{};
  still.obstacle_speed_max = 0.0;
  const Command c = ControlCycle(At(0.0), per, PlanTo({5, 0}), FieldGains{},
                                 RobotParams{}, 0.0);
  EXPECT_DOUBLE_EQ(c.v_star, DesiredSpeed({0.0, 1.0}, still));
  EXPECT_GT(c.v_star, DesiredSpeed({0.0, 1.0}, RobotParams{}));
}

TEST(ControlCycleTest, LocalMinimumFlag) {
  Perception per = See(2.0, kPi, 0.0);
  FieldGains g;
  g.k_rep = g.k_att / MaxSafeSpeedGradient(2.0, RobotParams{});
  EXPECT_TRUE(ControlCycle(At(0.0), per, PlanTo({5, 0}), g, RobotParams{}, 0.0)
                  .local_minimum);
}

TEST(ControlCyclePropertyTest, OutputContractPureAndSound) {
  std::mt19937_64 rng(41);
  auto u = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  for (int i = 0; i < 5000; ++i) {
    RobotParams p;
    p.brake = u(0.05, 2.0);
    p.accel_max = u(0.0, 2.0);
    p.cycle_max = u(0.01, 0.5);
    p.obstacle_speed_max = u(0.0, 2.0);
    p.velocity_margin = u(1e-3, 0.2);
    p.omega_max = u(0.1, 3.0);
    FieldGains g;
    g.k_att = u(0.01, 1.0);
    g.k_rep = u(0.01, 2.0);
    const RobotState s = At(u(0.0, 3.0), u(-kPi, kPi));
    const Perception per = See(u(0.0, 20.0), u(-kPi, kPi), u(-kPi, kPi));
    const Command c = ControlCycle(s, per, PlanTo({1, 1}), g, p, 0.0);
    // v* is a speed command and never negative.
    EXPECT_GE(c.v_star, 0.0);
    EXPECT_LE(c.v_star,
              std::max(0.0, MaxSafeSpeed(per.d, p) - p.velocity_margin +
                                p.accel_max * p.cycle_max) +
                  1e-12);
    EXPECT_LE(std::abs(c.omega_star), p.omega_max);
    if (c.mode == Mode::kDrive) {
      EXPECT_TRUE(IsSafe({s.v, per.d}, p));
    }
    const Command again = ControlCycle(s, per, PlanTo({1, 1}), g, p, 0.0);
    EXPECT_EQ(c.v_star, again.v_star);
    EXPECT_EQ(c.omega_star, again.omega_star);
    EXPECT_EQ(c.mode, again.mode);
  }
}

TEST(AdvanceWaypointTest, Progression) {
  WaypointPlan plan{{{1, 0}, {2, 0}}, 0.3};
  plan = AdvanceWaypoint(plan, {0, 0});
  EXPECT_EQ(plan.active_index, 0u);
  plan = AdvanceWaypoint(plan, {0.8, 0.0});
  EXPECT_EQ(plan.active_index, 1u);
  EXPECT_FALSE(plan.complete);
  // Standing on both waypoints at once still consumes only one per call.
  WaypointPlan stacked{{{0, 0}, {0, 0}}, 0.3};
  stacked = AdvanceWaypoint(stacked, {0, 0});
  EXPECT_FALSE(stacked.complete);
  stacked = AdvanceWaypoint(stacked, {0, 0});
  EXPECT_TRUE(stacked.complete);
  plan = AdvanceWaypoint(plan, {2.1, 0.1});
  EXPECT_TRUE(plan.complete);
  EXPECT_EQ(plan.active_index, 1u);
}

TEST(WaypointPlanTest, Validation) {
  EXPECT_THROW(WaypointPlan{}.Validate(), Error);
  WaypointPlan plan{{{1, 0}}, 0.0};
  EXPECT_THROW(plan.Validate(), Error);
}

}  // namespace
}  // namespace safeguard
