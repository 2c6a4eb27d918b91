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

#include "ptloc/locate.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ptloc/error.h"

namespace ptloc {
namespace {

Pose2d PlanarCompose(const Pose2d& a, const Pose2d& b) {
  const double c = std::cos(a.theta());
  const double s = std::sin(a.theta());
  return Pose2d(a.x() + c * b.x() - s * b.y(), a.y() + s * b.x() + c * b.y(),
                a.theta() + b.theta());
}

Pose2d PlanarBetween(const Pose2d& from, const Pose2d& to) {
  const double c = std::cos(from.theta());
  const double s = std::sin(from.theta());
  const double dx = to.x() - from.x();
  const double dy = to.y() - from.y();
  return Pose2d(c * dx + s * dy, -s * dx + c * dy, to.theta() - from.theta());
}

// Advances `pose` by a planar increment; z, roll and pitch carry over.
Pose3d PlanarPropagate(const Pose3d& pose, const Pose3d& increment) {
  return WithPlanar(
      PlanarCompose(ProjectPlanar(pose), ProjectPlanar(increment)), pose);
}

void RequireInitialized(const LocalizerState& state) {
  if (!state.initialized) {
    throw Error(ErrorCode::kNotInitialized, "localizer not initialized");
  }
}

}  // namespace

void LocalizerConfig::Validate() const {
  if (!(min_roi_radius >= 1.0)) {
    throw Error(ErrorCode::kInvalidParameter, "min_roi_radius must be >= 1 m");
  }
  if (!(gain_position >= 0.0 && gain_position <= 1.0) ||
      !(gain_heading >= 0.0 && gain_heading <= 1.0)) {
    throw Error(ErrorCode::kInvalidParameter, "fusion gains must be in [0, 1]");
  }
  if (!(scan_period > 0.0) || !(scan_voxel > 0.0) ||
      roi_radius_per_speed < 0.0 || roi_range_margin < 0.0 ||
      max_consecutive_rejections < 1) {
    throw Error(ErrorCode::kInvalidParameter, "invalid localizer config");
  }
  icp.Validate();
}

void OdometryHistory::TrimBefore(double time) {
  // Keep one sample at or before `time` so interpolation stays anchored.
  while (samples_.size() > 1 && samples_[1].time <= time) samples_.pop_front();
}

Pose3d OdometryHistory::OdomAt(double time) const {
  if (samples_.empty()) return Pose3d::Identity();
  if (time <= samples_.front().time) return samples_.front().odom;
  if (time >= samples_.back().time) return samples_.back().odom;
  const auto next = std::upper_bound(
      samples_.begin(), samples_.end(), time,
      [](double t, const Sample& s) { return t < s.time; });
  const auto prev = std::prev(next);
  const double alpha = (time - prev->time) / (next->time - prev->time);
  const Pose2d a = ProjectPlanar(prev->odom);
  const Pose2d b = ProjectPlanar(next->odom);
  const Pose2d mid(a.x() + alpha * (b.x() - a.x()),
                   a.y() + alpha * (b.y() - a.y()),
                   a.theta() + alpha * NormalizeAngle(b.theta() - a.theta()));
  return WithPlanar(mid, prev->odom);
}

Pose3d OdometryHistory::Increment(double t0, double t1) const {
  if (samples_.empty()) return Pose3d::Identity();
  return EmbedPlanar(
      PlanarBetween(ProjectPlanar(OdomAt(t0)), ProjectPlanar(OdomAt(t1))));
}

double OdometryHistory::Speed(double window) const {
  if (samples_.size() < 2) return 0.0;
  const double t1 = samples_.back().time;
  const double t0 = std::max(samples_.front().time, t1 - window);
  if (!(t1 > t0)) return 0.0;
  return (OdomAt(t1).translation() - OdomAt(t0).translation())
             .head<2>()
             .norm() /
         (t1 - t0);
}

LocalizerState Initialize(const MapIndex& map, const Pose3d& initial_pose,
                          const LocalizerConfig& config, double time) {
  config.Validate();
  if (map.empty()) throw Error(ErrorCode::kEmptyInput, "empty map");
  LocalizerState state;
  state.last_lidar_pose = initial_pose;
  state.prev_lidar_pose = initial_pose;
  state.fused_pose = initial_pose;
  state.fused_timestamp = time;
  state.initialized = true;
  return state;
}

Prediction Predict(const LocalizerState& state, const Pose3d& current_odom,
                   double now, const LocalizerConfig& config) {
  RequireInitialized(state);
  Prediction p;
  p.from_odometry = Compose(
      state.last_lidar_pose, Between(state.odom_at_last_lidar, current_odom));
  p.from_momentum =
      Compose(state.last_lidar_pose,
              Between(state.prev_lidar_pose, state.last_lidar_pose));
  p.odometry_fresh = state.have_odometry &&
                     now - state.last_odom_time <= 2.0 * config.scan_period;
  p.fused = p.odometry_fresh ? p.from_odometry : p.from_momentum;
  return p;
}

double RoiRadius(double speed, const LocalizerConfig& config) {
  return std::max({1.0, config.min_roi_radius,
                   config.roi_range_margin +
                       std::abs(speed) * config.roi_radius_per_speed});
}

PointCloud ExtractRoi(const MapIndex& map, const Pose3d& predicted,
                      double speed, const LocalizerConfig& config) {
  PointCloud roi =
      RadiusQuery(map, predicted.translation(), RoiRadius(speed, config));
  if (roi.empty()) {
    throw Error(ErrorCode::kInsufficientOverlap, "ROI contains no map points");
  }
  return roi;
}

Pose3d WithPlanar(const Pose2d& planar, const Pose3d& vertical) {
  const Eigen::Quaterniond tilt =
      YawRotation(-Yaw(vertical.rotation())) * vertical.rotation();
  return Pose3d(YawRotation(planar.theta()) * tilt,
                Eigen::Vector3d(planar.x(), planar.y(),
                                vertical.translation().z()));
}

Pose3d Fuse(const Pose3d& predicted, const Pose3d& measured,
            const FusionGains& gains, double measurement_time, double now,
            const OdometryHistory* history) {
  const Pose2d p = ProjectPlanar(predicted);
  const Pose2d m = ProjectPlanar(measured);
  const Pose2d blended(
      p.x() + gains.position * (m.x() - p.x()),
      p.y() + gains.position * (m.y() - p.y()),
      p.theta() + gains.heading * NormalizeAngle(m.theta() - p.theta()));
  Pose3d corrected = WithPlanar(blended, measured);
  if (history != nullptr && now > measurement_time) {
    corrected =
        PlanarPropagate(corrected, history->Increment(measurement_time, now));
  }
  return corrected;
}

ScanUpdate OnScan(const LocalizerState& state, const PointCloud& scan,
                  double scan_time, const MapIndex& map,
                  const LocalizerConfig& config) {
  RequireInitialized(state);
  if (scan_time < state.fused_timestamp - config.max_scan_latency) {
    throw Error(ErrorCode::kOrdering, "scan older than the allowed latency");
  }
  ScanUpdate out;
  out.state = state;
  const Pose3d current_odom =
      !state.have_odometry ? state.odom_at_last_lidar
                           : state.history.OdomAt(scan_time);
  out.prediction = Predict(state, current_odom, scan_time, config);

  auto reject = [&]() -> ScanUpdate {
    ++out.state.consecutive_rejections;
    ++out.state.rejected_scans;
    if (out.state.consecutive_rejections >= config.max_consecutive_rejections) {
      throw Error(ErrorCode::kLostLocalization,
                  std::to_string(out.state.consecutive_rejections) +
                      " consecutive scans rejected");
    }
    out.status = ScanStatus::kRejected;
    return out;
  };

  try {
    const double speed = state.history.Speed(0.5);
    // The ROI restricts the map index queries instead of being copied into
    // an index of its own; the matches are the same. An empty ROI falls back
    // to the whole map.
    const Ball roi{out.prediction.fused.translation(),
                   RoiRadius(speed, config)};
    const bool roi_empty = !map.NearestWithin(
        roi.center, std::nextafter(roi.radius, std::numeric_limits<double>::infinity()));
    const PointCloud source = VoxelDownsample(scan, config.scan_voxel);
    out.icp = Register(source, map, out.prediction.fused, config.icp,
                       roi_empty ? nullptr : &roi);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kInsufficientOverlap &&
        e.code() != ErrorCode::kDegenerateGeometry) {
      throw;
    }
    return reject();
  }
  if (!out.icp->converged) return reject();

  LocalizerState& s = out.state;
  out.status = ScanStatus::kAccepted;
  out.lidar_pose = out.icp->transform;
  s.prev_lidar_pose = s.last_lidar_pose;
  s.last_lidar_pose = out.lidar_pose;
  s.odom_at_last_lidar = current_odom;
  s.consecutive_rejections = 0;

  const FusionGains gains{config.gain_position, config.gain_heading};
  auto& samples = s.history.mutable_samples();
  // Fused estimate at the scan instant, from the latest sample not after it.
  Pose3d fused_at_scan = s.fused_pose;
  const auto after = std::upper_bound(
      samples.begin(), samples.end(), scan_time,
      [](double t, const OdometryHistory::Sample& x) { return t < x.time; });
  if (after != samples.begin()) {
    const auto& base = *std::prev(after);
    fused_at_scan = PlanarPropagate(
        base.fused, s.history.Increment(base.time, scan_time));
  }
  const Pose3d corrected =
      Fuse(fused_at_scan, out.lidar_pose, gains, scan_time, scan_time);
  // Replay the buffered odometry on top of the corrected estimate.
  for (auto it = after; it != samples.end(); ++it) {
    it->fused =
        PlanarPropagate(corrected, s.history.Increment(scan_time, it->time));
  }
  const double now = std::max(s.fused_timestamp, scan_time);
  s.fused_pose =
      Fuse(fused_at_scan, out.lidar_pose, gains, scan_time, now, &s.history);
  s.fused_timestamp = now;
  return out;
}

OdometryUpdate OnOdometry(const LocalizerState& state, const Pose3d& odom_pose,
                          double time, const LocalizerConfig& config) {
  RequireInitialized(state);
  if (time < state.fused_timestamp ||
      (state.have_odometry && time < state.last_odom_time)) {
    throw Error(ErrorCode::kOrdering, "odometry time went backwards");
  }
  OdometryUpdate out{state, state.fused_pose};
  LocalizerState& s = out.state;
  if (!s.have_odometry) {
    s.have_odometry = true;
    s.odom_at_last_lidar = odom_pose;
  } else {
    s.fused_pose =
        PlanarPropagate(s.fused_pose, Between(s.last_odom, odom_pose));
  }
  s.last_odom = odom_pose;
  s.last_odom_time = time;
  s.fused_timestamp = time;
  s.history.Push({time, odom_pose, s.fused_pose});
  s.history.TrimBefore(time - config.odometry_buffer_seconds);
  out.fused_pose = s.fused_pose;
  return out;
}

}  // namespace ptloc
