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

#include <algorithm>
#include <cmath>
#include <limits>

#include "ptloc/error.h"

namespace ptloc {
namespace {

constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kLidarStream = 1;
constexpr std::uint64_t kGpsStream = 2;

std::uint64_t SplitMix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Entry distance of a ray into an axis-aligned box, or -1 if it misses or
// starts inside.
double IntersectBox(const Box& box, const Eigen::Vector3d& origin,
                    const Eigen::Vector3d& direction) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 3; ++axis) {
    if (direction[axis] == 0.0) {
      if (origin[axis] < box.min[axis] || origin[axis] > box.max[axis]) {
        return -1.0;
      }
      continue;
    }
    double t0 = (box.min[axis] - origin[axis]) / direction[axis];
    double t1 = (box.max[axis] - origin[axis]) / direction[axis];
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
    if (t_near > t_far) return -1.0;
  }
  if (t_near < 0.0) return -1.0;
  return t_near;
}

}  // namespace

std::uint64_t CounterRng::Bits(std::uint64_t stream,
                               std::uint64_t counter) const {
  return SplitMix64(SplitMix64(seed_ + (stream + 1) * kGoldenGamma) +
                    (counter + 1) * kGoldenGamma);
}

double CounterRng::Uniform(std::uint64_t stream, std::uint64_t counter) const {
  return static_cast<double>(Bits(stream, counter) >> 11) * 0x1.0p-53;
}

double CounterRng::Gaussian(std::uint64_t stream, std::uint64_t counter) const {
  const double u1 = 1.0 - Uniform(stream, 2 * counter);  // (0, 1]
  const double u2 = Uniform(stream, 2 * counter + 1);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

void World::Validate() const {
  auto check = [](const Box& b) {
    if (!(b.min.array() < b.max.array()).all()) {
      throw Error(ErrorCode::kInvalidParameter, "box min must be < max");
    }
  };
  for (const auto& b : static_boxes) check(b);
  for (const auto& b : dynamic_boxes) check(b.box);
}

void LidarModel::Validate() const {
  if (channels < 1 || !(rate > 0.0) || rays_per_revolution < 1 ||
      !(max_range > min_range) || min_range < 0.0 || range_noise_sigma < 0.0 ||
      !(horizontal_fov > 0.0) || vertical_fov < 0.0) {
    throw Error(ErrorCode::kInvalidParameter, "invalid LiDAR model");
  }
}

bool GpsModel::InDropout(double time) const {
  for (const auto& [start, end] : dropout_intervals) {
    if (time >= start && time < end) return true;
  }
  return false;
}

void GpsModel::Validate() const {
  if (!(rate > 0.0) || noise_sigma < 0.0) {
    throw Error(ErrorCode::kInvalidParameter, "invalid GPS model");
  }
  for (std::size_t i = 0; i < dropout_intervals.size(); ++i) {
    const auto& [start, end] = dropout_intervals[i];
    if (!(start < end) ||
        (i > 0 && start < dropout_intervals[i - 1].second)) {
      throw Error(ErrorCode::kInvalidParameter,
                  "GPS dropout intervals must be ordered and disjoint");
    }
  }
}

Trajectory::Trajectory(std::vector<Waypoint> waypoints)
    : waypoints_(std::move(waypoints)) {
  if (waypoints_.empty()) {
    throw Error(ErrorCode::kEmptyInput, "trajectory needs waypoints");
  }
  for (std::size_t i = 1; i < waypoints_.size(); ++i) {
    if (!(waypoints_[i].time > waypoints_[i - 1].time)) {
      throw Error(ErrorCode::kOrdering,
                  "waypoint times not increasing at index " +
                      std::to_string(i));
    }
  }
}

Pose2d Trajectory::At(double time) const {
  const auto& w = waypoints_;
  if (time <= w.front().time) return Pose2d(w.front().x, w.front().y, w.front().yaw);
  if (time >= w.back().time) return Pose2d(w.back().x, w.back().y, w.back().yaw);
  const auto next = std::upper_bound(
      w.begin(), w.end(), time,
      [](double t, const Waypoint& p) { return t < p.time; });
  const auto& a = *std::prev(next);
  const auto& b = *next;
  const double alpha = (time - a.time) / (b.time - a.time);
  return Pose2d(a.x + alpha * (b.x - a.x), a.y + alpha * (b.y - a.y),
                a.yaw + alpha * NormalizeAngle(b.yaw - a.yaw));
}

Pose3d SensorPose(const Pose2d& vehicle, const LidarModel& lidar) {
  return Pose3d::FromYaw(vehicle.theta(),
                         Eigen::Vector3d(vehicle.x(), vehicle.y(),
                                         lidar.mount_height));
}

double CastRay(const World& world, const Eigen::Vector3d& origin,
               const Eigen::Vector3d& direction, double time, double min_range,
               double max_range) {
  double best = std::numeric_limits<double>::infinity();
  auto consider = [&](double t) {
    if (t >= min_range && t <= max_range && t < best) best = t;
  };
  if (world.ground_plane && direction.z() < 0.0 && origin.z() > 0.0) {
    consider(-origin.z() / direction.z());
  }
  for (const auto& box : world.static_boxes) {
    consider(IntersectBox(box, origin, direction));
  }
  for (const auto& moving : world.dynamic_boxes) {
    consider(IntersectBox(moving.At(time), origin, direction));
  }
  return std::isfinite(best) ? best : -1.0;
}

PointCloud RaycastScan(const World& world, const Pose3d& sensor_pose,
                       const LidarModel& model, double time,
                       std::uint64_t seed, std::uint64_t scan_id) {
  model.Validate();
  const CounterRng rng = CounterRng(seed).Split(kLidarStream).Split(scan_id);
  const Eigen::Matrix3d rotation = sensor_pose.rotation().toRotationMatrix();
  const double full_turn = 2.0 * std::numbers::pi;
  const bool full_sweep = model.horizontal_fov >= full_turn;
  PointCloud scan;
  scan.set_timestamp(time);
  for (int ch = 0; ch < model.channels; ++ch) {
    const double elevation =
        model.channels == 1
            ? 0.0
            : -0.5 * model.vertical_fov +
                  model.vertical_fov * ch / (model.channels - 1);
    for (int k = 0; k < model.rays_per_revolution; ++k) {
      const double azimuth =
          -std::numbers::pi + (k + 0.5) * full_turn / model.rays_per_revolution;
      if (!full_sweep && std::abs(azimuth) > 0.5 * model.horizontal_fov) {
        continue;
      }
      const Eigen::Vector3d local(std::cos(elevation) * std::cos(azimuth),
                                  std::cos(elevation) * std::sin(azimuth),
                                  std::sin(elevation));
      const double range =
          CastRay(world, sensor_pose.translation(), rotation * local, time,
                  model.min_range, model.max_range);
      if (range < 0.0) continue;
      const auto ray_id =
          static_cast<std::uint64_t>(ch) * model.rays_per_revolution + k;
      const double noisy =
          model.range_noise_sigma > 0.0
              ? range + model.range_noise_sigma * rng.Gaussian(0, ray_id)
              : range;
      if (noisy <= 0.0) continue;
      scan.push_back(noisy * local);
    }
  }
  return scan;
}

PointCloud MaskHorizontalFov(const PointCloud& scan, double fov) {
  PointCloud out;
  out.set_timestamp(scan.timestamp());
  for (const auto& p : scan) {
    if (std::abs(std::atan2(p.y(), p.x())) <= 0.5 * fov) out.push_back(p);
  }
  return out;
}

SensorLog RunScenario(const World& world, const Trajectory& trajectory,
                      const SensorSuite& sensors, double duration,
                      std::uint64_t seed) {
  if (!(duration > 0.0)) {
    throw Error(ErrorCode::kInvalidParameter, "duration must be positive");
  }
  world.Validate();
  sensors.lidar.Validate();
  sensors.encoder.Validate();
  sensors.gps.Validate();
  if (!(sensors.encoder_rate > 0.0)) {
    throw Error(ErrorCode::kInvalidParameter, "encoder rate must be positive");
  }

  SensorLog log;
  log.sensors = sensors;
  auto ground_truth = [&](double t) {
    return SensorPose(trajectory.At(t), sensors.lidar);
  };

  // Encoder: whole pulses of the cumulative wheel travel.
  const double quantum = sensors.encoder.quantum();
  const double half_base = 0.5 * sensors.encoder.wheel_base;
  double travel_left = 0.0;
  double travel_right = 0.0;
  Pose2d previous = trajectory.At(0.0);
  for (std::uint64_t k = 0;; ++k) {
    const double t = static_cast<double>(k) / sensors.encoder_rate;
    if (t >= duration) break;
    const Pose2d current = trajectory.At(t);
    const double dx = current.x() - previous.x();
    const double dy = current.y() - previous.y();
    const double chord = std::hypot(dx, dy);
    const double forward = dx * std::cos(previous.theta()) +
                           dy * std::sin(previous.theta());
    const double dtheta = NormalizeAngle(current.theta() - previous.theta());
    // Arc length of a constant-curvature segment with this chord.
    const double arc = std::abs(dtheta) > 1e-9
                           ? chord * (0.5 * dtheta) / std::sin(0.5 * dtheta)
                           : chord;
    const double ds = forward < 0.0 ? -arc : arc;
    const long before_left = static_cast<long>(std::floor(travel_left / quantum));
    const long before_right =
        static_cast<long>(std::floor(travel_right / quantum));
    travel_left += ds - dtheta * half_base;
    travel_right += ds + dtheta * half_base;
    EncoderTick tick;
    tick.timestamp = t;
    tick.pulses_left =
        static_cast<long>(std::floor(travel_left / quantum)) - before_left;
    tick.pulses_right =
        static_cast<long>(std::floor(travel_right / quantum)) - before_right;
    log.events.push_back(
        LogEvent{t, EventType::kEncoder, log.ticks.size(), ground_truth(t)});
    log.ticks.push_back(tick);
    previous = current;
  }

  const CounterRng gps_rng = CounterRng(seed).Split(kGpsStream);
  for (std::uint64_t k = 0;; ++k) {
    const double t = static_cast<double>(k) / sensors.gps.rate;
    if (t >= duration) break;
    if (sensors.gps.InDropout(t)) continue;
    const Pose3d truth = ground_truth(t);
    const Eigen::Vector3d noise(gps_rng.Gaussian(0, 3 * k),
                                gps_rng.Gaussian(0, 3 * k + 1),
                                gps_rng.Gaussian(0, 3 * k + 2));
    log.events.push_back(
        LogEvent{t, EventType::kGps, log.gps.size(), truth});
    log.gps.push_back(
        GpsFix{t, truth.translation() + sensors.gps.noise_sigma * noise});
  }

  for (std::uint64_t k = 0;; ++k) {
    const double t = static_cast<double>(k) / sensors.lidar.rate;
    if (t >= duration) break;
    const Pose3d truth = ground_truth(t);
    log.events.push_back(
        LogEvent{t, EventType::kScan, log.scans.size(), truth});
    log.scans.push_back(
        RaycastScan(world, truth, sensors.lidar, t, seed, k));
  }

  std::stable_sort(log.events.begin(), log.events.end(),
                   [](const LogEvent& a, const LogEvent& b) {
                     if (a.time != b.time) return a.time < b.time;
                     return static_cast<int>(a.type) < static_cast<int>(b.type);
                   });
  return log;
}

SensorLog RunScenario(const Scenario& scenario) {
  return RunScenario(scenario.world, Trajectory(scenario.waypoints),
                     scenario.sensors, scenario.duration, scenario.seed);
}

}  // namespace ptloc
