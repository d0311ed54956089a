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

#include "safeguard/safety.h"

#include <cmath>
#include <numbers>
#include <random>

#include "gtest/gtest.h"
#include "safeguard/verify.h"

namespace safeguard {
namespace {

// A = b = 0.3 m/s^2, epsilon = 0.1 s, V = 0.75 m/s.
RobotParams SquareParams() { return RobotParams{}; }

// Reference values computed with 30-digit arithmetic.
constexpr double kBudgetAt1 = 4.519666666666667;
constexpr double kBudgetAt0 = 0.153;
constexpr double kVmaxAt2 = 0.378624472835663;
constexpr double kUnclampedVmaxAt0 = -0.0588009584670651;
constexpr double kGradientAt2 = 0.178468506415563;
constexpr double kVstarAt2 = 0.398624472835663;

TEST(SafetyTest, StoppingBudget) {
  EXPECT_NEAR(StoppingBudget(1.0, SquareParams()), kBudgetAt1, 1e-12);
  EXPECT_NEAR(StoppingBudget(0.0, SquareParams()), kBudgetAt0, 1e-12);
}

TEST(SafetyTest, StrictInequality) {
  const RobotParams p = SquareParams();
  const double d = std::numbers::sqrt2 * StoppingBudget(0.5, p);
  EXPECT_FALSE(IsSafe({0.5, d * (1.0 - 1e-12)}, p));
  EXPECT_TRUE(IsSafe({0.5, d * (1.0 + 1e-12)}, p));
  EXPECT_FALSE(IsSafe({0.0, 0.0}, p));
}

TEST(SafetyTest, MaxSafeSpeedReference) {
  const RobotParams p = SquareParams();
  EXPECT_NEAR(MaxSafeSpeed(2.0, p), kVmaxAt2, 1e-12);
  EXPECT_EQ(MaxSafeSpeed(0.0, p), 0.0);
  const double ratio = p.accel_max / p.brake + 1.0;
  const double unclamped = p.brake * std::sqrt(SafeSpeedRadicand(0.0, p)) -
                           p.obstacle_speed_max - ratio * p.cycle_max * p.brake;
  EXPECT_NEAR(unclamped, kUnclampedVmaxAt0, 1e-12);
}

TEST(SafetyTest, MaxSafeSpeedBrakingLimit) {
  RobotParams p;
  p.obstacle_speed_max = 0.0;
  p.accel_max = 0.0;
  p.cycle_max = 1e-9;
  for (double d : {0.1, 1.0, 7.5}) {
    EXPECT_NEAR(MaxSafeSpeed(d, p),
                std::sqrt(std::numbers::sqrt2 * d * p.brake), 1e-8);
  }
}

TEST(SafetyTest, GradientReference) {
  const RobotParams p = SquareParams();
  EXPECT_NEAR(MaxSafeSpeedGradient(2.0, p), kGradientAt2, 1e-12);
  EXPECT_NEAR(verify::FiniteDiffGradient(2.0, p, 1e-6), kGradientAt2, 1e-8);
  EXPECT_LT(MaxSafeSpeedGradient(1e6, p), 1e-3);
}

TEST(SafetyTest, GradientCarriesInverseSqrt2) {
  // The exact derivative is (1/sqrt2)/sqrt(radicand), not 1/sqrt(radicand).
  const RobotParams p = SquareParams();
  const double without_factor = 1.0 / std::sqrt(SafeSpeedRadicand(2.0, p));
  EXPECT_NEAR(MaxSafeSpeedGradient(2.0, p) * std::numbers::sqrt2,
              without_factor, 1e-15);
  EXPECT_GT(std::abs(without_factor - kGradientAt2), 0.05);
}

TEST(SafetyTest, DesiredSpeed) {
  const RobotParams p = SquareParams();
  EXPECT_NEAR(DesiredSpeed({0.0, 2.0}, p), kVstarAt2, 1e-12);
  EXPECT_EQ(DesiredSpeed({1.0, 2.0}, p), 0.0);  // unsafe
}

TEST(SafetyTest, ModeAutomaton) {
  const RobotParams p = SquareParams();
  EXPECT_EQ(StepMode(Mode::kBrake, {0.0, 2.0}, p), Mode::kDrive);
  EXPECT_EQ(StepMode(Mode::kDrive, {1.0, 2.0}, p), Mode::kBrake);
  EXPECT_EQ(StepMode(Mode::kBrake, {0.0, 0.0}, p), Mode::kBrake);
  EXPECT_EQ(ModeName(Mode::kBrake), "Brake");
}

struct Draw {
  RobotParams p;
  double d;
};

Draw RandomDraw(std::mt19937_64& rng) {
  auto u = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  Draw out;
  out.p.brake = u(0.05, 2.0);
  out.p.accel_max = u(0.0, 2.0);
  out.p.cycle_max = u(0.01, 0.5);
  out.p.obstacle_speed_max = u(0.0, 2.0);
  out.d = u(0.0, 50.0);
  return out;
}

TEST(SafetyPropertyTest, BoundaryConsistency) {
  std::mt19937_64 rng(11);
  int checked = 0;
  for (int i = 0; i < 2000; ++i) {
    const Draw w = RandomDraw(rng);
    const double v = MaxSafeSpeed(w.d, w.p);
    if (v <= 0.0) continue;
    ++checked;
    EXPECT_TRUE(IsSafe({std::max(0.0, v - 1e-7), w.d}, w.p));
    EXPECT_FALSE(IsSafe({v + 1e-7, w.d}, w.p));
  }
  EXPECT_GT(checked, 1000);
}

TEST(SafetyPropertyTest, MatchesBisection) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 2000; ++i) {
    const Draw w = RandomDraw(rng);
    EXPECT_NEAR(MaxSafeSpeed(w.d, w.p), verify::BisectMaxSafeSpeed(w.d, w.p),
                1e-9);
  }
}

TEST(SafetyPropertyTest, Monotonicity) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 2000; ++i) {
    Draw w = RandomDraw(rng);
    const double v = MaxSafeSpeed(w.d, w.p);
    EXPECT_LE(v, MaxSafeSpeed(w.d + 0.01, w.p));
    RobotParams faster = w.p;
    faster.obstacle_speed_max += 0.1;
    EXPECT_GE(v, MaxSafeSpeed(w.d, faster));
  }
}

TEST(SafetyPropertyTest, DesiredSpeedReachableAndSafe) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> speed(0.0, 3.0);
  for (int i = 0; i < 2000; ++i) {
    Draw w = RandomDraw(rng);
    w.p.velocity_margin = 1e-3 + 0.1 * speed(rng);
    const double vs = DesiredSpeed({speed(rng), w.d}, w.p);
    if (vs > 0.0) {
      const double floor_speed =
          std::max(0.0, vs - w.p.accel_max * w.p.cycle_max);
      EXPECT_TRUE(IsSafe({floor_speed, w.d}, w.p));
    }
  }
}

}  // namespace
}  // namespace safeguard
