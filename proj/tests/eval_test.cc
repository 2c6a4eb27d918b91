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

#include "ptloc/eval.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>

#include "gtest/gtest.h"
#include "ptloc/error.h"

namespace ptloc {
namespace {

ErrorCode CodeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIo;
}

PoseTrajectory Line(double t0, double t1, double dt) {
  PoseTrajectory out;
  for (int k = 0; t0 + k * dt <= t1 + 1e-12; ++k) {
    const double t = t0 + k * dt;
    out.push_back({t, Pose3d::FromYaw(0.3, Eigen::Vector3d(t, 2 * t, 0))});
  }
  return out;
}

// Straight path with exactly 1 m between samples.
PoseTrajectory MeterSteps(int n) {
  PoseTrajectory out;
  for (int k = 0; k <= n; ++k) {
    out.push_back({0.5 * k, Pose3d::FromYaw(0.9273, Eigen::Vector3d(0.6 * k, 0.8 * k, 0))});
  }
  return out;
}

PoseTrajectory Offset(const PoseTrajectory& in, const Eigen::Vector3d& d) {
  PoseTrajectory out = in;
  for (auto& s : out) s.pose = Pose3d(s.pose.rotation(), s.pose.translation() + d);
  return out;
}

TEST(EvalTest, IdenticalTrajectoriesHaveZeroError) {
  const PoseTrajectory gt = Line(0, 10, 0.1);
  for (const auto& e : ErrorSeries(gt, gt)) EXPECT_EQ(e.error, 0.0);
}

TEST(EvalTest, ConstantOffset) {
  const PoseTrajectory gt = Line(0, 10, 0.1);
  const auto plus = ErrorSeries(Offset(gt, {0.06, 0.08, 0.0}), gt);
  const auto minus = ErrorSeries(Offset(gt, {-0.06, -0.08, 0.0}), gt);
  ASSERT_EQ(plus.size(), gt.size());
  for (std::size_t i = 0; i < plus.size(); ++i) {
    EXPECT_NEAR(plus[i].error, 0.10, 1e-12);
    EXPECT_NEAR(minus[i].error, plus[i].error, 1e-12);
  }
  // Height does not count.
  for (const auto& e : ErrorSeries(Offset(gt, {0, 0, 3.0}), gt)) {
    EXPECT_NEAR(e.error, 0.0, 1e-12);
  }
}

TEST(EvalTest, InterpolatesGroundTruth) {
  // GT x = t^2 at 100 Hz; estimate x = t^2 + 0.1 t at 20 Hz, off-grid.
  PoseTrajectory gt;
  for (int k = 0; k <= 500; ++k) {
    const double t = 0.01 * k;
    gt.push_back({t, Pose3d::FromTranslation(Eigen::Vector3d(t * t, 0, 0))});
  }
  PoseTrajectory est;
  for (int k = 0; k < 99; ++k) {
    const double t = 0.013 + 0.05 * k;
    est.push_back(
        {t, Pose3d::FromTranslation(Eigen::Vector3d(t * t + 0.1 * t, 0, 0))});
  }
  const auto series = ErrorSeries(est, gt);
  ASSERT_EQ(series.size(), est.size());
  for (const auto& e : series) {
    const double ti = 0.01 * std::floor(e.time / 0.01 + 1e-9);
    const double interp = ti * ti + (e.time - ti) * (2 * ti + 0.01);
    const double expected = std::abs(e.time * e.time + 0.1 * e.time - interp);
    EXPECT_NEAR(e.error, expected, 1e-9) << e.time;
  }
}

TEST(EvalTest, SeriesSkipsStampsOutsideGroundTruth) {
  const PoseTrajectory gt = Line(1, 2, 0.1);
  const auto series = ErrorSeries(Line(0, 3, 0.5), gt);
  ASSERT_EQ(series.size(), 3u);  // 1.0, 1.5, 2.0
  EXPECT_DOUBLE_EQ(series.front().time, 1.0);
  EXPECT_EQ(CodeOf([&] { ErrorSeries(Line(5, 6, 0.1), gt); }),
            ErrorCode::kAlignment);
}

TEST(EvalTest, StatsExamples) {
  const ErrorStats flat = Stats(std::vector<double>{0.1, 0.1, 0.1});
  EXPECT_NEAR(flat.mean, 0.1, 1e-15);
  EXPECT_NEAR(flat.median, 0.1, 1e-15);
  EXPECT_NEAR(flat.rmse, 0.1, 1e-15);
  EXPECT_NEAR(flat.std, 0.0, 1e-15);
  EXPECT_EQ(flat.sample_count, 3u);

  const ErrorStats two = Stats(std::vector<double>{0.0, 0.2});
  EXPECT_NEAR(two.mean, 0.1, 1e-15);
  EXPECT_NEAR(two.median, 0.1, 1e-15);
  EXPECT_NEAR(two.rmse, 0.141421356, 1e-9);
  EXPECT_NEAR(two.std, 0.1, 1e-15);
  EXPECT_EQ(two.min, 0.0);
  EXPECT_EQ(two.max, 0.2);

  EXPECT_EQ(CodeOf([] { Stats(std::vector<double>{}); }), ErrorCode::kEmptyInput);
}

TEST(EvalTest, StatsIdentityOnRandomSeries) {
  std::mt19937_64 rng(3);
  std::exponential_distribution<double> dist(5.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(1 + trial * 7);
    for (double& x : v) x = dist(rng);
    const ErrorStats s = Stats(v);
    EXPECT_NEAR(s.rmse * s.rmse, s.mean * s.mean + s.std * s.std, 1e-9);
    EXPECT_LE(s.min, s.median);
    EXPECT_LE(s.median, s.max);
    EXPECT_LE(s.p50, s.p66_7);
    EXPECT_LE(s.p66_7, s.p95);
  }
}

TEST(EvalTest, Percentiles) {
  const std::vector<double> v = {4, 1, 3, 2, 5};
  EXPECT_DOUBLE_EQ(Percentile(v, 0), 1.0);
  EXPECT_DOUBLE_EQ(Percentile(v, 50), 3.0);
  EXPECT_DOUBLE_EQ(Percentile(v, 100), 5.0);
  EXPECT_DOUBLE_EQ(Percentile(v, 62.5), 3.5);
}

TEST(EvalTest, ReportFormatFixture) {
  // Reference magnitudes from a published KITTI 00 run, used only to pin the
  // report layout.
  ErrorStats s;
  s.mean = 0.227894;
  s.median = 0.141765;
  s.rmse = 0.324986;
  s.std = 0.231690;
  s.sample_count = 4541;
  const std::string text = FormatStats(s);
  EXPECT_NE(text.find("Mean               0.227894\n"), std::string::npos) << text;
  EXPECT_NE(text.find("Median             0.141765\n"), std::string::npos);
  EXPECT_NE(text.find("RMSE               0.324986\n"), std::string::npos);
  EXPECT_NE(text.find("Std                0.231690\n"), std::string::npos);
  EXPECT_NE(text.find("Samples            4541\n"), std::string::npos);
  const std::string csv = FormatStatsCsv(s);
  EXPECT_EQ(csv.rfind("measure,value\nmean,0.227894000\n", 0), 0u) << csv;
}

TEST(EvalTest, ByLengthOfPerfectEstimate) {
  const PoseTrajectory gt = MeterSteps(500);
  const LengthTable t = ErrorByLength(gt, gt, {100, 200, 400, 800, 1600});
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(t.skipped_lengths, 2u);
  for (const auto& row : t.rows) {
    EXPECT_NEAR(row.translation_percent, 0.0, 1e-9);
    EXPECT_NEAR(row.rotation_deg_per_m, 0.0, 1e-9);
    EXPECT_GT(row.segments, 0u);
  }
  EXPECT_TRUE(ErrorByLength(gt, gt, {}).rows.empty());
}

TEST(EvalTest, ByLengthOfScaledEstimate) {
  const PoseTrajectory gt = MeterSteps(1000);
  PoseTrajectory est = gt;
  for (auto& s : est) {
    s.pose = Pose3d(s.pose.rotation(), 1.01 * s.pose.translation());
  }
  const LengthTable t = ErrorByLength(est, gt, {100, 200, 400, 800});
  ASSERT_EQ(t.rows.size(), 4u);
  for (const auto& row : t.rows) {
    EXPECT_NEAR(row.translation_percent, 1.0, 1e-9) << row.length;
    EXPECT_NEAR(row.rotation_deg_per_m, 0.0, 1e-9);
  }
  EXPECT_NE(FormatLengthTable(t).find("100.0"), std::string::npos);
}

TEST(EvalTest, TrajectoryFileRoundTrip) {
  const PoseTrajectory t = Line(0, 1, 0.25);
  const std::string path = ::testing::TempDir() + "traj_roundtrip.txt";
  WriteTrajectory(path, t);
  const PoseTrajectory back = ReadTrajectory(path);
  ASSERT_EQ(back.size(), t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_NEAR(back[i].time, t[i].time, 1e-9);
    EXPECT_LT((back[i].pose.translation() - t[i].pose.translation()).norm(), 1e-9);
  }
  {
    std::ofstream out(path);
    out << "# comment\n0 1 2 3 0 0 0 1\n\n1 1 2 3 0 0 0 1 # trailing\n";
  }
  EXPECT_EQ(ReadTrajectory(path).size(), 2u);
  {
    std::ofstream out(path);
    out << "0 1 2 3 0 0 0\n";
  }
  EXPECT_EQ(CodeOf([&] { ReadTrajectory(path); }), ErrorCode::kParse);
  std::remove(path.c_str());
  EXPECT_EQ(CodeOf([&] { ReadTrajectory(path); }), ErrorCode::kIo);
}

TEST(EvalTest, InterpolatePose) {
  const PoseTrajectory t = {
      {0.0, Pose3d::FromYaw(0.0, Eigen::Vector3d(0, 0, 0))},
      {1.0, Pose3d::FromYaw(1.0, Eigen::Vector3d(2, 0, 0))}};
  const Pose3d mid = InterpolatePose(t, 0.25);
  EXPECT_NEAR(mid.translation().x(), 0.5, 1e-12);
  EXPECT_NEAR(Yaw(mid.rotation()), 0.25, 1e-12);
}

TEST(EvalTest, TimingHistogram) {
  TimingRecord r;
  const std::vector<double> samples = {0.001, 0.0099, 0.01, 0.035, 0.1995,
                                       0.2, 0.9, 0.05, 0.05};
  for (double s : samples) r.Add(s);
  const auto h = r.Histogram();
  ASSERT_EQ(h.size(), TimingRecord::kBuckets);
  std::size_t total = 0;
  for (auto c : h) total += c;
  EXPECT_EQ(total, samples.size());
  EXPECT_EQ(h[0], 2u);
  EXPECT_EQ(h[1], 1u);
  EXPECT_EQ(h[3], 1u);
  EXPECT_EQ(h[5], 2u);
  EXPECT_EQ(h[19], 1u);
  EXPECT_EQ(h[20], 2u);  // 200 ms and beyond
  const std::string text = r.Format();
  EXPECT_NE(text.find("(9 scans)"), std::string::npos);
  EXPECT_NE(text.find("p95"), std::string::npos);
}

TEST(EvalTest, TimingHistogramSumsOnRandomSamples) {
  std::mt19937_64 rng(9);
  std::exponential_distribution<double> dist(20.0);
  TimingRecord r;
  for (int i = 0; i < 5000; ++i) r.Add(dist(rng));
  std::size_t total = 0;
  for (auto c : r.Histogram()) total += c;
  EXPECT_EQ(total, 5000u);
}

}  // namespace
}  // namespace ptloc
