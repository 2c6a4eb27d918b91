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

#ifndef PTLOC_PIPELINE_H_
#define PTLOC_PIPELINE_H_

#include <cstddef>
#include <vector>

#include "ptloc/cloud.h"
#include "ptloc/eval.h"
#include "ptloc/graph.h"
#include "ptloc/locate.h"
#include "ptloc/sim.h"

namespace ptloc {

// Dead-reckoned sensor poses in the map frame, one per encoder tick,
// anchored at the log's initial pose.
PoseTrajectory OdometryTrajectory(const SensorLog& log);

// Ground-truth sensor poses at every distinct event time.
PoseTrajectory GroundTruthTrajectory(const SensorLog& log);

struct LogMappingOptions {
  MapBuildParams graph = [] {
    MapBuildParams p;
    // Scan-matched odometry is far tighter than the wheel encoders.
    p.odometry_sigma_per_meter = 0.02;
    p.odometry_rotation_sigma = 0.002;
    p.loop_submap_keyframes = 2;
    p.loop_min_point_z = -1.5;
    return p;
  }();
  double keyframe_distance = 1.0;  // m
  double keyframe_angle = 0.2;     // rad
  double scan_voxel = 0.1;         // per-scan sparsification, m
  bool use_gps = true;
  double gps_time_tolerance = 1e-6;  // s

  // Odometry edges come from matching each keyframe scan against the last
  // few keyframes, seeded by the wheel odometry. Disabled, the wheel
  // odometry is used as is.
  bool lidar_odometry = true;
  std::size_t submap_keyframes = 3;
  double odometry_source_voxel = 0.4;  // m
  // Source points below this height in the sensor frame are left out of the
  // match: ground rings move with the sensor and pull the estimate towards
  // standing still. Height, roll and pitch then stay at the wheel estimate.
  double odometry_min_point_z = -1.5;  // m
  IcpParams odometry_icp = [] {
    IcpParams p;
    p.delta = 1.0;
    p.max_iterations = 50;
    p.min_inliers = 50;
    return p;
  }();
};

struct LogMappingResult {
  MapBuildResult build;
  PoseTrajectory keyframe_trajectory;  // optimized, stamped
  std::size_t keyframes = 0;
  std::size_t gps_edges = 0;
  std::size_t odometry_fallbacks = 0;  // keyframes left at wheel odometry
};

// Keyframes are taken every keyframe_distance / keyframe_angle of wheel
// odometry motion, plus every scan that coincides with a GPS fix.
LogMappingResult BuildMapFromLog(const SensorLog& log,
                                 const LogMappingOptions& options);

struct LocalizeOptions {
  LocalizerConfig config;
  bool half_fov = false;
  // Allows re-seeding from the latest GPS fix after a lost-localization
  // fault. Scan matching itself never uses GPS.
  bool use_gps = true;
};

struct LocalizeResult {
  PoseTrajectory fused;   // one pose per encoder tick
  PoseTrajectory lidar;   // accepted scan registrations
  TimingRecord timing;    // OnScan wall time
  std::size_t accepted_scans = 0;
  std::size_t rejected_scans = 0;
  std::size_t recoveries = 0;
};

LocalizeResult LocalizeLog(const MapIndex& map, const SensorLog& log,
                           const LocalizeOptions& options);

}  // namespace ptloc

#endif  // PTLOC_PIPELINE_H_
