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

#include "ptloc/sim.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <string>

#include "gtest/gtest.h"
#include "ptloc/error.h"
#include "ptloc/eval.h"
#include "ptloc/pipeline.h"
#include "test_world.h"

namespace ptloc {
namespace {

namespace fs = std::filesystem;
using testing::CleanLidar;
using testing::MakeBox;
using testing::RoomWorld;

ErrorCode CodeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIo;
}

// Distance from p to the surface of the nearest box.
double SurfaceDistance(const World& world, const Eigen::Vector3d& p) {
  double best = 1e300;
  for (const Box& b : world.static_boxes) {
    const Eigen::Vector3d outside =
        (b.min - p).cwiseMax(p - b.max).cwiseMax(Eigen::Vector3d::Zero());
    const double d = outside.norm() > 0.0
                         ? outside.norm()
                         : (p - b.min).cwiseMin(b.max - p).minCoeff();
    best = std::min(best, d);
  }
  return best;
}

Scenario StraightScenario() {
  Scenario sc;
  sc.world.static_boxes = {MakeBox(-30, 8, -1, 40, 9, 4),
                           MakeBox(-30, -9, -1, 40, -8, 4)};
  sc.waypoints = {{0.0, 0.0, 0.0, 0.0}, {9.0, 10.0, 0.0, 0.0}};
  sc.sensors.lidar.rays_per_revolution = 90;
  sc.sensors.gps.rate = 5.0;
  sc.duration = 10.0;
  sc.seed = 42;
  return sc;
}

std::string ReadAll(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

TEST(SimTest, CastRayHitsWall) {
  World w;
  w.ground_plane = false;
  w.static_boxes = {MakeBox(10, -50, -50, 11, 50, 50)};
  EXPECT_NEAR(CastRay(w, Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitX(), 0.0,
                      0.1, 100.0),
              10.0, 1e-12);
  EXPECT_LT(CastRay(w, Eigen::Vector3d::Zero(), -Eigen::Vector3d::UnitX(), 0.0,
                    0.1, 100.0),
            0.0);
  EXPECT_LT(CastRay(w, Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitX(), 0.0,
                    0.1, 5.0),
            0.0);  // beyond max range
}

TEST(SimTest, HorizontalBeamOnWall) {
  World w;
  w.ground_plane = false;
  w.static_boxes = {MakeBox(10, -50, -50, 11, 50, 50)};
  LidarModel m = CleanLidar();
  m.channels = 1;
  m.rays_per_revolution = 2;  // azimuths -pi/2 and +pi/2
  // Rotate the sensor so one ray points along world +x.
  const PointCloud scan =
      RaycastScan(w, Pose3d::FromYaw(-std::numbers::pi / 2), m, 0.0, 1);
  ASSERT_EQ(scan.size(), 1u);
  const Eigen::Vector3d world_point =
      Apply(Pose3d::FromYaw(-std::numbers::pi / 2), scan[0]);
  EXPECT_LT((world_point - Eigen::Vector3d(10, 0, 0)).norm(), 1e-9);
}

TEST(SimTest, EmptyWorldGivesEmptyScan) {
  World w;
  w.ground_plane = false;
  EXPECT_TRUE(RaycastScan(w, Pose3d::Identity(), LidarModel(), 0.0, 1).empty());
}

TEST(SimTest, ScanPointsLieOnTheWorld) {
  const World w = RoomWorld();
  const Pose3d pose = Pose3d::FromYaw(0.7, Eigen::Vector3d(3, -2, 1.8));
  const PointCloud clean = RaycastScan(w, pose, CleanLidar(), 0.0, 1);
  ASSERT_GT(clean.size(), 5000u);
  for (const auto& p : clean) {
    ASSERT_LT(SurfaceDistance(w, Apply(pose, p)), 1e-9);
  }
  LidarModel noisy = CleanLidar();
  noisy.range_noise_sigma = 0.02;
  const PointCloud scan = RaycastScan(w, pose, noisy, 0.0, 1);
  for (const auto& p : scan) {
    EXPECT_LT(SurfaceDistance(w, Apply(pose, p)), 6 * 0.02);
  }
}

TEST(SimTest, MovingBoxesMove) {
  World w;
  w.ground_plane = false;
  w.dynamic_boxes = {MovingBox{MakeBox(5, -1, -1, 6, 1, 1),
                               Eigen::Vector3d(1, 0, 0)}};
  EXPECT_NEAR(CastRay(w, Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitX(), 0.0,
                      0.1, 100.0),
              5.0, 1e-12);
  EXPECT_NEAR(CastRay(w, Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitX(), 2.0,
                      0.1, 100.0),
              7.0, 1e-12);
}

TEST(SimTest, HalfFovMask) {
  PointCloud c({Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 1, 0),
                Eigen::Vector3d(-1, 0.1, 0), Eigen::Vector3d(0.1, -1, 0)});
  EXPECT_EQ(MaskHorizontalFov(c, std::numbers::pi).size(), 3u);
}

TEST(SimTest, SensorRates) {
  const SensorLog log = RunScenario(StraightScenario());
  EXPECT_EQ(log.scans.size(), 100u);
  EXPECT_EQ(log.ticks.size(), 500u);
  EXPECT_EQ(log.gps.size(), 50u);
  EXPECT_EQ(log.events.size(), 650u);
  for (std::size_t i = 1; i < log.events.size(); ++i) {
    EXPECT_LE(log.events[i - 1].time, log.events[i].time);
  }
}

TEST(SimTest, EncoderMatchesArcLength) {
  const Scenario sc = StraightScenario();
  const SensorLog log = RunScenario(sc);
  long left = 0;
  long right = 0;
  const double q = sc.sensors.encoder.quantum();
  for (const auto& t : log.ticks) {
    left += t.pulses_left;
    right += t.pulses_right;
    // Cumulative travel is within one pulse of the truth at every tick.
    const double truth = std::min(10.0, t.timestamp * 10.0 / 9.0);
    EXPECT_LE(std::abs(left * q - truth), q);
    EXPECT_LE(std::abs(right * q - truth), q);
  }
  EXPECT_LE(std::abs(left * q - 10.0), q);
  EXPECT_LE(std::abs(right * q - 10.0), q);
}

TEST(SimTest, GpsDropout) {
  Scenario sc = StraightScenario();
  const std::size_t full = RunScenario(sc).gps.size();
  sc.sensors.gps.dropout_intervals = {{2.0, 4.0}};
  const SensorLog log = RunScenario(sc);
  EXPECT_EQ(full - log.gps.size(), 10u);
  for (const auto& fix : log.gps) {
    EXPECT_FALSE(fix.time >= 2.0 && fix.time < 4.0);
  }
}

TEST(SimTest, SameSeedSameBytes) {
  const Scenario sc = StraightScenario();
  const fs::path a = fs::path(::testing::TempDir()) / "sim_det_a";
  const fs::path b = fs::path(::testing::TempDir()) / "sim_det_b";
  fs::remove_all(a);
  fs::remove_all(b);
  WriteSensorLog(a.string(), RunScenario(sc));
  WriteSensorLog(b.string(), RunScenario(sc));
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const fs::path other = b / fs::relative(entry.path(), a);
    ASSERT_TRUE(fs::exists(other)) << other;
    EXPECT_EQ(ReadAll(entry.path()), ReadAll(other)) << entry.path();
    ++files;
  }
  EXPECT_GT(files, 100u);

  Scenario other_seed = sc;
  other_seed.seed = 43;
  const SensorLog x = RunScenario(sc);
  const SensorLog y = RunScenario(other_seed);
  EXPECT_NE(x.scans[3][0], y.scans[3][0]);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(SimTest, LogRoundTrip) {
  const SensorLog log = RunScenario(StraightScenario());
  const fs::path dir = fs::path(::testing::TempDir()) / "sim_roundtrip";
  fs::remove_all(dir);
  WriteSensorLog(dir.string(), log);
  const SensorLog back = ReadSensorLog(dir.string());
  ASSERT_EQ(back.events.size(), log.events.size());
  ASSERT_EQ(back.scans.size(), log.scans.size());
  for (std::size_t i = 0; i < log.events.size(); ++i) {
    EXPECT_EQ(back.events[i].type, log.events[i].type);
    EXPECT_EQ(back.events[i].index, log.events[i].index);
    EXPECT_NEAR(back.events[i].time, log.events[i].time, 1e-9);
    EXPECT_LT((back.events[i].ground_truth.translation() -
               log.events[i].ground_truth.translation())
                  .norm(),
              1e-9);
  }
  for (std::size_t i = 0; i < log.ticks.size(); ++i) {
    EXPECT_EQ(back.ticks[i].pulses_left, log.ticks[i].pulses_left);
    EXPECT_EQ(back.ticks[i].pulses_right, log.ticks[i].pulses_right);
  }
  ASSERT_EQ(back.scans[50].size(), log.scans[50].size());
  for (std::size_t i = 0; i < log.scans[50].size(); ++i) {
    EXPECT_LT((back.scans[50][i] - log.scans[50][i]).norm(), 1e-6);
  }
  EXPECT_EQ(back.sensors.encoder.pulses_per_rev,
            log.sensors.encoder.pulses_per_rev);
  fs::remove_all(dir);
}

TEST(SimTest, ScenarioJsonRoundTrip) {
  Scenario sc = StraightScenario();
  sc.world.dynamic_boxes = {
      MovingBox{MakeBox(1, 2, 0, 3, 4, 2), Eigen::Vector3d(0.5, 0, 0)}};
  sc.sensors.gps.dropout_intervals = {{1.0, 2.5}, {4.0, 5.0}};
  const std::string path = ::testing::TempDir() + "scenario.json";
  SaveScenario(path, sc);
  const Scenario back = LoadScenario(path);
  std::remove(path.c_str());
  EXPECT_EQ(back.seed, sc.seed);
  EXPECT_EQ(back.duration, sc.duration);
  ASSERT_EQ(back.world.static_boxes.size(), 2u);
  EXPECT_EQ(back.world.static_boxes[1].max, sc.world.static_boxes[1].max);
  ASSERT_EQ(back.world.dynamic_boxes.size(), 1u);
  EXPECT_EQ(back.world.dynamic_boxes[0].velocity, Eigen::Vector3d(0.5, 0, 0));
  ASSERT_EQ(back.waypoints.size(), 2u);
  EXPECT_EQ(back.waypoints[1].x, 10.0);
  EXPECT_EQ(back.sensors.gps.dropout_intervals, sc.sensors.gps.dropout_intervals);
  EXPECT_EQ(back.sensors.lidar.rays_per_revolution, 90);
  // Same scenario, same log.
  EXPECT_EQ(RunScenario(back).scans[10].size(), RunScenario(sc).scans[10].size());
}

TEST(SimTest, BundledScenarioLoads) {
  const Scenario sc = LoadScenario(std::string(PTLOC_DATA_DIR) + "/estate.json");
  EXPECT_GT(sc.world.static_boxes.size(), 10u);
  EXPECT_EQ(sc.world.dynamic_boxes.size(), 3u);
  EXPECT_EQ(sc.sensors.lidar.channels, 16);
}

TEST(SimTest, ValidationErrors) {
  Scenario sc = StraightScenario();
  sc.duration = 0.0;
  EXPECT_EQ(CodeOf([&] { RunScenario(sc); }), ErrorCode::kInvalidParameter);
  sc = StraightScenario();
  sc.world.static_boxes.push_back(MakeBox(1, 1, 1, 0, 2, 2));
  EXPECT_EQ(CodeOf([&] { RunScenario(sc); }), ErrorCode::kInvalidParameter);
  sc = StraightScenario();
  sc.sensors.lidar.channels = 0;
  EXPECT_EQ(CodeOf([&] { RunScenario(sc); }), ErrorCode::kInvalidParameter);
  sc = StraightScenario();
  sc.sensors.gps.dropout_intervals = {{1.0, 3.0}, {2.0, 4.0}};
  EXPECT_EQ(CodeOf([&] { RunScenario(sc); }), ErrorCode::kInvalidParameter);
  EXPECT_EQ(CodeOf([] { Trajectory({}); }), ErrorCode::kEmptyInput);
  EXPECT_EQ(CodeOf([] {
              Trajectory({{1.0, 0, 0, 0}, {0.5, 1, 0, 0}});
            }),
            ErrorCode::kOrdering);
  EXPECT_EQ(CodeOf([] { ReadSensorLog("/nonexistent/ptloc/log"); }),
            ErrorCode::kIo);
}

TEST(SimTest, CounterRng) {
  const CounterRng rng(7);
  EXPECT_EQ(rng.Bits(1, 2), CounterRng(7).Bits(1, 2));
  EXPECT_NE(rng.Bits(1, 2), rng.Bits(1, 3));
  EXPECT_NE(rng.Bits(1, 2), rng.Bits(2, 2));
  double sum = 0.0;
  double sum_sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.Uniform(0, i);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double g = rng.Gaussian(1, i);
    sum += g;
    sum_sq += g * g;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.05);
  EXPECT_NEAR(sum_sq / n, 1.0, 0.05);
}

TEST(SimTest, TrajectoryInterpolates) {
  const Trajectory t({{0.0, 0, 0, 3.0}, {1.0, 2, 4, -3.0}});
  const Pose2d mid = t.At(0.5);
  EXPECT_DOUBLE_EQ(mid.x(), 1.0);
  EXPECT_DOUBLE_EQ(mid.y(), 2.0);
  // Shortest arc through +-pi, not through 0.
  EXPECT_NEAR(std::abs(mid.theta()), std::numbers::pi, 1e-12);
  EXPECT_DOUBLE_EQ(t.At(5.0).x(), 2.0);  // clamped
}

// A noise-free log localized against a map made of its own scans: every
// registration lands within 1 cm; between scans the fused pose carries
// encoder quantization, bounded by one pulse.
TEST(SimTest, NoiseFreeLogLocalizesExactly) {
  Scenario sc;
  sc.world = RoomWorld();
  sc.sensors.lidar = CleanLidar();
  sc.sensors.lidar.rays_per_revolution = 360;
  sc.sensors.gps.noise_sigma = 0.0;
  sc.duration = 20.0;
  sc.seed = 9;
  for (double t = 0.0; t <= 21.0; t += 0.1) {
    const double a = t / 3.0;
    sc.waypoints.push_back(
        Waypoint{t, 6 * std::sin(a) - 2, 6 - 6 * std::cos(a) - 6, a});
  }
  const SensorLog log = RunScenario(sc);
  std::vector<Eigen::Vector3d> pts;
  for (const auto& e : log.events) {
    if (e.type != EventType::kScan) continue;
    for (const auto& p : log.scans[e.index]) pts.push_back(Apply(e.ground_truth, p));
  }
  const MapIndex map = MapIndex::FromSparse(PointCloud(std::move(pts)), 0.02);
  LocalizeOptions options;
  options.config.scan_voxel = 0.2;
  const LocalizeResult r = LocalizeLog(map, log, options);
  const PoseTrajectory truth = GroundTruthTrajectory(log);
  EXPECT_EQ(r.rejected_scans, 0u);
  double lidar_worst = 0.0;
  for (const auto& e : ErrorSeries(r.lidar, truth)) {
    lidar_worst = std::max(lidar_worst, e.error);
  }
  double fused_worst = 0.0;
  for (const auto& e : ErrorSeries(r.fused, truth)) {
    fused_worst = std::max(fused_worst, e.error);
  }
  EXPECT_LT(lidar_worst, 0.01);
  EXPECT_LT(fused_worst, sc.sensors.encoder.quantum());
}

}  // namespace
}  // namespace ptloc
