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

#ifndef PTLOC_SIM_H_
#define PTLOC_SIM_H_

#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "Eigen/Core"
#include "ptloc/cloud.h"
#include "ptloc/geom.h"
#include "ptloc/odom.h"

namespace ptloc {

// Counter-based generator: output = SplitMix64 finalizer applied to
// seed + (counter + 1) * 0x9E3779B97F4A7C15, with mixing constants
// 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB. Every draw is addressed by
// (stream, counter) so results do not depend on evaluation order.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  // Independent generator for a named sub-stream.
  CounterRng Split(std::uint64_t stream) const {
    return CounterRng(Bits(~stream, stream));
  }
  std::uint64_t Bits(std::uint64_t stream, std::uint64_t counter) const;
  // Uniform in [0, 1) with 53 random bits.
  double Uniform(std::uint64_t stream, std::uint64_t counter) const;
  // Standard normal via Box-Muller on counters 2k and 2k + 1.
  double Gaussian(std::uint64_t stream, std::uint64_t counter) const;

 private:
  std::uint64_t seed_;
};

struct Box {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Ones();
};

struct MovingBox {
  Box box;                       // pose at t = 0
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  // m/s

  Box At(double time) const {
    return Box{box.min + velocity * time, box.max + velocity * time};
  }
};

struct World {
  std::vector<Box> static_boxes;
  bool ground_plane = true;  // z = 0
  std::vector<MovingBox> dynamic_boxes;

  void Validate() const;
};

struct LidarModel {
  int channels = 16;
  double vertical_fov = 30.0 * std::numbers::pi / 180.0;
  double horizontal_fov = 2.0 * std::numbers::pi;  // centred on +x
  int rays_per_revolution = 900;
  double rate = 10.0;  // Hz
  double range_noise_sigma = 0.02;
  double min_range = 0.5;
  double max_range = 60.0;
  double mount_height = 1.8;  // sensor z above the ground

  void Validate() const;
};

struct GpsModel {
  double noise_sigma = 0.02;
  std::vector<std::pair<double, double>> dropout_intervals;  // [start, end)
  double rate = 1.0;  // Hz

  bool InDropout(double time) const;
  void Validate() const;
};

struct SensorSuite {
  LidarModel lidar;
  EncoderConfig encoder;
  double encoder_rate = 50.0;  // Hz
  GpsModel gps;
};

struct Waypoint {
  double time;
  double x;
  double y;
  double yaw;
};

// Ground-truth vehicle path, linear in position and shortest-arc in yaw
// between waypoints, clamped outside the covered time range.
class Trajectory {
 public:
  explicit Trajectory(std::vector<Waypoint> waypoints);

  Pose2d At(double time) const;
  double start_time() const { return waypoints_.front().time; }
  double end_time() const { return waypoints_.back().time; }
  const std::vector<Waypoint>& waypoints() const { return waypoints_; }

 private:
  std::vector<Waypoint> waypoints_;
};

// Sensor pose for a vehicle pose: raised by the mount height.
Pose3d SensorPose(const Pose2d& vehicle, const LidarModel& lidar);

// Distance along unit `direction` to the first hit in [min_range, max_range],
// or a negative value for a miss.
double CastRay(const World& world, const Eigen::Vector3d& origin,
               const Eigen::Vector3d& direction, double time, double min_range,
               double max_range);

// One instantaneous sweep; points are in the sensor frame. Rays are
// enumerated channel-major so the noise draw for each ray is fixed by
// (seed, scan_id, ray index).
PointCloud RaycastScan(const World& world, const Pose3d& sensor_pose,
                       const LidarModel& model, double time,
                       std::uint64_t seed, std::uint64_t scan_id = 0);

// Keeps points whose azimuth lies within +/- fov/2 of the sensor x axis.
PointCloud MaskHorizontalFov(const PointCloud& scan, double fov);

enum class EventType { kEncoder = 0, kGps = 1, kScan = 2 };

struct GpsFix {
  double time;
  Eigen::Vector3d position;
};

struct LogEvent {
  double time;
  EventType type;
  std::size_t index;  // into the stream of `type`
  Pose3d ground_truth;  // sensor pose at `time`
};

struct SensorLog {
  SensorSuite sensors;
  std::vector<LogEvent> events;  // time-ordered; ties: encoder, GPS, scan
  std::vector<PointCloud> scans;
  std::vector<EncoderTick> ticks;
  std::vector<GpsFix> gps;

  Pose3d initial_pose() const { return events.front().ground_truth; }
};

struct Scenario {
  World world;
  std::vector<Waypoint> waypoints;
  SensorSuite sensors;
  double duration = 10.0;
  std::uint64_t seed = 1;
};

// Samples every sensor at its own rate on [0, duration). Encoder ticks hold
// the whole pulses accumulated since the previous tick, derived from the
// ground-truth wheel arc lengths; GPS fixes inside dropouts are withheld.
SensorLog RunScenario(const World& world, const Trajectory& trajectory,
                      const SensorSuite& sensors, double duration,
                      std::uint64_t seed);
SensorLog RunScenario(const Scenario& scenario);

Scenario LoadScenario(const std::string& path);
void SaveScenario(const std::string& path, const Scenario& scenario);

// Directory layout: index.txt ("time type payload"), groundtruth.txt,
// encoder.txt, gps.txt, sensors.json and scans/NNNNNN.xyz.
void WriteSensorLog(const std::string& directory, const SensorLog& log);
SensorLog ReadSensorLog(const std::string& directory);

}  // namespace ptloc

#endif  // PTLOC_SIM_H_
