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

#include "safeguard/verify.h"

#include <cmath>
#include <string>

#include "gtest/gtest.h"

namespace safeguard::verify {
namespace {

constexpr double kVmaxAt2 = 0.378624472835663;
constexpr double kGradientAt2 = 0.178468506415563;

FuzzOptions SmallFuzz(std::size_t runs) {
  FuzzOptions opt;
  opt.runs = runs;
  opt.seed = 11;
  opt.duration = 10.0;
  opt.threads = 2;
  return opt;
}

TEST(BisectTest, MatchesReference) {
  const RobotParams p;
  EXPECT_NEAR(BisectMaxSafeSpeed(2.0, p), kVmaxAt2, 1e-9);
  EXPECT_EQ(BisectMaxSafeSpeed(0.0, p), 0.0);
  // Below the zero-speed budget nothing is safe.
  EXPECT_EQ(BisectMaxSafeSpeed(0.1, p), 0.0);
}

TEST(FiniteDiffTest, MatchesReference) {
  const RobotParams p;
  EXPECT_NEAR(FiniteDiffGradient(2.0, p, 1e-5), kGradientAt2, 1e-8);
  EXPECT_LT(FiniteDiffGradient(1e6, p, 1e-2), 1e-3);
  EXPECT_THROW(FiniteDiffGradient(2.0, p, 0.0), Error);
  EXPECT_THROW(FiniteDiffGradient(0.0, p, 1e-3), Error);
}

TEST(BrakeCheckTest, EnvelopeSpeedsPass) {
  const RobotParams p;
  for (double d : {0.3, 1.0, 2.0, 10.0}) {
    RobotState s;
    s.v = MaxSafeSpeed(d, p);
    EXPECT_TRUE(WorstCaseBrakeCheck(s, d, p).pass) << d;
  }
}

TEST(BrakeCheckTest, DetectsExcessSpeed) {
  const RobotParams p;
  for (double d : {0.2, 0.5, 0.99}) {
    RobotState s;
    s.v = MaxSafeSpeed(d, p) + 0.1;
    const BrakeVerdict v = WorstCaseBrakeCheck(s, d, p);
    EXPECT_FALSE(v.pass) << d;
    EXPECT_LE(v.min_separation, 0.0);
  }
}

TEST(BrakeCheckTest, RobotAtRestPasses) {
  RobotState s;
  const BrakeVerdict v = WorstCaseBrakeCheck(s, 0.05, RobotParams{});
  EXPECT_TRUE(v.pass);
  EXPECT_EQ(v.stop_time, 0.0);
}

TEST(FuzzTest, NoFailuresUnderAssumptions) {
  const FuzzReport r = FuzzPassiveSafety(SmallFuzz(16));
  EXPECT_EQ(r.runs, 16u);
  EXPECT_TRUE(r.failures.empty());
  EXPECT_FALSE(r.drive_samples.empty());
  for (const DriveSample& s : r.drive_samples) {
    RobotState st;
    st.v = s.v;
    EXPECT_TRUE(WorstCaseBrakeCheck(st, s.d, s.params).pass);
  }
}

TEST(FuzzTest, BreachFailuresAreLabelled) {
  FuzzOptions opt = SmallFuzz(16);
  opt.breach_assumptions = true;
  const FuzzReport r = FuzzPassiveSafety(opt);
  EXPECT_FALSE(r.failures.empty());
  EXPECT_EQ(r.GenuineFailures(), 0u);
  for (const FuzzFailure& f : r.failures) {
    EXPECT_EQ(f.label, "assumption-violated");
  }
}

TEST(FuzzTest, ZeroRunsIsAnError) {
  EXPECT_THROW(FuzzPassiveSafety(SmallFuzz(0)), Error);
}

TEST(FuzzTest, IndependentOfThreadCount) {
  FuzzOptions one = SmallFuzz(8);
  one.threads = 1;
  FuzzOptions four = SmallFuzz(8);
  four.threads = 4;
  EXPECT_EQ(FuzzReportToJson(FuzzPassiveSafety(one)).dump(),
            FuzzReportToJson(FuzzPassiveSafety(four)).dump());
}

TEST(FuzzTest, ScenariosAreSeededAndValid) {
  FuzzOptions opt = SmallFuzz(1);
  opt.randomize_params = true;
  for (std::size_t i = 0; i < 50; ++i) {
    const std::uint64_t seed = RunSeed(opt.seed, i);
    const Scenario a = FuzzScenario(seed, opt);
    const Scenario b = FuzzScenario(seed, opt);
    ASSERT_EQ(a.robots.size(), 1u);
    const std::size_t extra = a.obstacles.size() - 4;
    EXPECT_GE(extra, 1u);
    EXPECT_LE(extra, 8u);
    EXPECT_EQ(a.obstacles.size(), b.obstacles.size());
    EXPECT_EQ(a.robots[0].spawn.position, b.robots[0].spawn.position);
  }
}

TEST(FuzzTest, ReportJson) {
  const FuzzReport r = FuzzPassiveSafety(SmallFuzz(2));
  const auto j = FuzzReportToJson(r);
  EXPECT_EQ(j["runs"], 2);
  EXPECT_EQ(j["seed"], 11);
  EXPECT_TRUE(j["failures"].is_array());
  EXPECT_EQ(j["param_ranges"]["brake"][0], 0.3);
  EXPECT_EQ(j["param_ranges"]["obstacle_speed_max"][1], 0.75);
}

}  // namespace
}  // namespace safeguard::verify
