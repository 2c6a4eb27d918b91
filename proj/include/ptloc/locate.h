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

#ifndef PTLOC_LOCATE_H_
#define PTLOC_LOCATE_H_

#include <cstddef>
#include <deque>
#include <optional>

#include "ptloc/cloud.h"
#include "ptloc/geom.h"
#include "ptloc/icp.h"

namespace ptloc {

struct LocalizerConfig {
  // ROI radius = max(min_roi_radius,
  //                  roi_range_margin + speed * roi_radius_per_speed).
  // The floor defaults to the range margin, so a stationary vehicle gets
  // exactly the floor. Validate() still refuses anything under 1 m.
  double min_roi_radius = 30.0;     // m
  double roi_range_margin = 30.0;   // m
  double roi_radius_per_speed = 0.5;  // s
  IcpParams icp = [] {
    IcpParams p;
    p.delta = 1.0;
    p.max_iterations = 50;
    // A 1e-3 rad step still moves a wall 30 m out by 3 cm, so rotation
    // needs the tighter bound.
    p.translation_epsilon = 1e-3;
    p.rotation_epsilon = 1e-4;
    p.min_inliers = 50;
    return p;
  }();
  double scan_voxel = 0.5;  // m, scan sparsification before matching
  double gain_position = 0.8;
  double gain_heading = 0.6;
  double scan_period = 0.1;  // s
  double odometry_buffer_seconds = 2.0;
  double max_scan_latency = 2.0;  // s
  int max_consecutive_rejections = 3;

  void Validate() const;
};

struct FusionGains {
  double position = 0.8;
  double heading = 0.6;
};

// Odometry poses and the fused pose emitted with each, over a sliding window.
class OdometryHistory {
 public:
  struct Sample {
    double time;
    Pose3d odom;
    Pose3d fused;
  };

  void Push(const Sample& s) { samples_.push_back(s); }
  void TrimBefore(double time);
  bool empty() const { return samples_.empty(); }
  const Sample& back() const { return samples_.back(); }
  const std::deque<Sample>& samples() const { return samples_; }
  std::deque<Sample>& mutable_samples() { return samples_; }

  // Odometry pose at `time`, interpolated in the plane between samples and
  // clamped to the window ends.
  Pose3d OdomAt(double time) const;
  // Planar odometry increment from t0 to t1 (identity if empty).
  Pose3d Increment(double t0, double t1) const;
  // Mean planar speed over the trailing `window` seconds.
  double Speed(double window) const;

 private:
  std::deque<Sample> samples_;
};

struct LocalizerState {
  Pose3d last_lidar_pose;  // T_{k-1}
  Pose3d prev_lidar_pose;  // T_{k-2}
  Pose3d odom_at_last_lidar;
  Pose3d fused_pose;
  double fused_timestamp = 0.0;
  bool initialized = false;

  bool have_odometry = false;
  Pose3d last_odom;
  double last_odom_time = 0.0;
  OdometryHistory history;

  int consecutive_rejections = 0;
  std::size_t rejected_scans = 0;
};

struct Prediction {
  Pose3d from_odometry;
  Pose3d from_momentum;
  Pose3d fused;
  bool odometry_fresh = false;
};

LocalizerState Initialize(const MapIndex& map, const Pose3d& initial_pose,
                          const LocalizerConfig& config, double time = 0.0);

// Two rough guesses of the pose at `now`: the last LiDAR fix advanced by the
// odometry increment since then, and the last LiDAR fix advanced by the
// previous LiDAR-to-LiDAR motion. The odometry guess wins while odometry is
// no older than two scan periods.
Prediction Predict(const LocalizerState& state, const Pose3d& current_odom,
                   double now, const LocalizerConfig& config);

double RoiRadius(double speed, const LocalizerConfig& config);

// Map points around the predicted position. Throws kInsufficientOverlap if
// nothing lies inside the ROI.
PointCloud ExtractRoi(const MapIndex& map, const Pose3d& predicted,
                      double speed, const LocalizerConfig& config);

// Keeps x, y, yaw from `planar` and z, roll, pitch from `vertical`.
Pose3d WithPlanar(const Pose2d& planar, const Pose3d& vertical);

// Constant-gain correction in the plane. The blend happens at
// `measurement_time` and is then carried forward to `now` by the odometry
// increments recorded in `history` (none when history is null or the
// measurement is current).
Pose3d Fuse(const Pose3d& predicted, const Pose3d& measured,
            const FusionGains& gains, double measurement_time, double now,
            const OdometryHistory* history = nullptr);

enum class ScanStatus { kAccepted, kRejected };

struct ScanUpdate {
  LocalizerState state;
  ScanStatus status = ScanStatus::kRejected;
  Pose3d lidar_pose;
  std::optional<IcpResult> icp;
  Prediction prediction;
};

// Registers one scan against the ROI around the prediction. A rejected scan
// leaves the estimate untouched and bumps the fault counters; too many in a
// row throws kLostLocalization.
ScanUpdate OnScan(const LocalizerState& state, const PointCloud& scan,
                  double scan_time, const MapIndex& map,
                  const LocalizerConfig& config);

struct OdometryUpdate {
  LocalizerState state;
  Pose3d fused_pose;
};

OdometryUpdate OnOdometry(const LocalizerState& state, const Pose3d& odom_pose,
                          double time, const LocalizerConfig& config);

}  // namespace ptloc

#endif  // PTLOC_LOCATE_H_
