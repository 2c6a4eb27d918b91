/*
 * Copyright 2026 The ptloc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "ptloc/odom.h"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "gtest/gtest.h"
#include "ptloc/error.h"

namespace ptloc {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(OdomTest, TickToDistances) {
  const EncoderConfig config;  // 36 pulses per 1.5 m revolution
  const WheelDistances one_rev =
      TickToDistances(config, EncoderTick{0.0, 36, 36});
  EXPECT_DOUBLE_EQ(one_rev.left, 1.5);
  EXPECT_DOUBLE_EQ(one_rev.right, 1.5);
  const WheelDistances none = TickToDistances(config, EncoderTick{0.0, 0, 0});
  EXPECT_EQ(none.left, 0.0);
  EXPECT_EQ(none.right, 0.0);
  const WheelDistances back =
      TickToDistances(config, EncoderTick{0.0, -18, -18});
  EXPECT_DOUBLE_EQ(back.left, -0.75);
}

TEST(OdomTest, ConfigValidation) {
  EncoderConfig bad;
  bad.wheel_base = 0.0;
  EXPECT_THROW(bad.Validate(), Error);
  bad = EncoderConfig();
  bad.pulses_per_rev = -1;
  EXPECT_THROW(bad.Validate(), Error);
  EXPECT_NO_THROW(EncoderConfig().Validate());
}

TEST(OdomTest, IntegrateStraight) {
  const Pose2d p = Integrate(Pose2d(0, 0, 0), 1.0, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(p.x(), 1.0);
  EXPECT_DOUBLE_EQ(p.y(), 0.0);
  EXPECT_DOUBLE_EQ(p.theta(), 0.0);
}

TEST(OdomTest, IntegrateMovesAlongPreviousHeading) {
  // d = (0 + pi/2) / 2 along heading 0, then turn by (pi/2 - 0) / 1.
  const Pose2d p = Integrate(Pose2d(0, 0, 0), 0.0, kPi / 2, 1.0);
  EXPECT_NEAR(p.x(), kPi / 4, 1e-15);
  EXPECT_NEAR(p.y(), 0.0, 1e-15);
  EXPECT_NEAR(p.theta(), kPi / 2, 1e-15);

  const Pose2d q = Integrate(Pose2d(2, 3, kPi / 2), 1.0, 1.0, 1.0);
  EXPECT_NEAR(q.x(), 2.0, 1e-15);
  EXPECT_NEAR(q.y(), 4.0, 1e-15);
  EXPECT_NEAR(q.theta(), kPi / 2, 1e-15);
}

TEST(OdomTest, IntegrateRejectsBadWheelBase) {
  try {
    Integrate(Pose2d(), 1.0, 1.0, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidParameter);
  }
  EXPECT_THROW(Integrate(Pose2d(), 1.0, 1.0, -1.0), Error);
}

TEST(OdomTest, HeadingIsPathSum) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  Pose2d p(1, -2, 0.4);
  double sum = 0.4;
  for (int i = 0; i < 1000; ++i) {
    const double l = u(rng), r = u(rng);
    const double theta = p.theta();
    p = Integrate(p, l, r, 1.3);
    sum += (r - l) / 1.3;
    if (l == r) EXPECT_EQ(p.theta(), theta);
  }
  EXPECT_NEAR(NormalizeAngle(p.theta() - sum), 0.0, 1e-9);
}

TEST(OdomTest, StraightMotionKeepsHeading) {
  Pose2d p(0, 0, 1.1);
  for (int i = 0; i < 100; ++i) p = Integrate(p, 0.25, 0.25, 1.2);
  EXPECT_EQ(p.theta(), Pose2d(0, 0, 1.1).theta());
}

TEST(OdomTest, ReversedTickRestoresHeading) {
  const Pose2d start(3, 4, -2.0);
  const Pose2d there = Integrate(start, 0.1, 0.3, 1.2);
  const Pose2d back = Integrate(there, -0.1, -0.3, 1.2);
  EXPECT_NEAR(NormalizeAngle(back.theta() - start.theta()), 0.0, 1e-9);
  // Euler steps use different headings out and back: first order only.
  EXPECT_LT(std::hypot(back.x() - start.x(), back.y() - start.y()), 0.1);
}

TEST(OdomTest, StreamEmptyAndAdditive) {
  EncoderConfig config;
  config.pulses_per_rev = 2.0;
  config.wheel_circumference = 1.0;  // 0.5 m per pulse
  EXPECT_TRUE(IntegrateStream(config, Pose2d(), {}).empty());
  const auto out = IntegrateStream(
      config, Pose2d(), {EncoderTick{0.1, 1, 1}, EncoderTick{0.2, 1, 1}});
  ASSERT_EQ(out.size(), 2u);
  EXPECT_DOUBLE_EQ(out[1].timestamp, 0.2);
  EXPECT_DOUBLE_EQ(out[1].pose.x(), 1.0);
  EXPECT_DOUBLE_EQ(out[1].pose.y(), 0.0);
  EXPECT_DOUBLE_EQ(out[1].pose.theta(), 0.0);
}

TEST(OdomTest, CircleClosesHeading) {
  // 100 ticks each turning 2 pi / 100.
  EncoderConfig config;
  const int n = 100;
  config.wheel_base = config.quantum() * n / (2 * kPi);
  std::vector<EncoderTick> ticks;
  for (int i = 0; i < n; ++i) ticks.push_back(EncoderTick{0.02 * (i + 1), 3, 4});
  const Pose2d start(0, 0, 0.25);
  const auto out = IntegrateStream(config, start, ticks);
  EXPECT_NEAR(NormalizeAngle(out.back().pose.theta() - start.theta()), 0.0,
              1e-3);
}

TEST(OdomTest, StreamOrderingErrorNamesIndex) {
  const std::vector<EncoderTick> ticks = {
      {0.1, 1, 1}, {0.2, 1, 1}, {0.2, 1, 1}};
  try {
    IntegrateStream(EncoderConfig(), Pose2d(), ticks);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOrdering);
    EXPECT_NE(std::string(e.what()).find("index 2"), std::string::npos);
  }
}

TEST(OdomTest, StreamFileRoundTrip) {
  const auto path =
      std::filesystem::temp_directory_path() / "ptloc_odom_test.txt";
  const std::vector<EncoderTick> ticks = {{0.02, 3, -1}, {0.04, 0, 7}};
  WriteEncoderStream(path.string(), ticks);
  const auto back = ReadEncoderStream(path.string());
  ASSERT_EQ(back.size(), 2u);
  EXPECT_DOUBLE_EQ(back[1].timestamp, 0.04);
  EXPECT_EQ(back[0].pulses_left, 3);
  EXPECT_EQ(back[0].pulses_right, -1);
  EXPECT_EQ(back[1].pulses_right, 7);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace ptloc
