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

#include "ptloc/pipeline.h"

#include <chrono>
#include <cmath>
#include <numbers>
#include <optional>

#include "ptloc/error.h"
#include "ptloc/icp.h"
#include "ptloc/locate.h"
#include "ptloc/odom.h"

namespace ptloc {

PoseTrajectory OdometryTrajectory(const SensorLog& log) {
  log.sensors.encoder.Validate();
  const Pose3d start = log.initial_pose();
  PoseTrajectory out;
  Pose2d odom;
  for (std::size_t i = 0; i < log.ticks.size(); ++i) {
    const auto& tick = log.ticks[i];
    if (i > 0 && !(tick.timestamp > log.ticks[i - 1].timestamp)) {
      throw Error(ErrorCode::kOrdering,
                  "encoder timestamps not strictly increasing at index " +
                      std::to_string(i));
    }
    const WheelDistances d = TickToDistances(log.sensors.encoder, tick);
    odom = Integrate(odom, d.left, d.right, log.sensors.encoder.wheel_base);
    out.push_back(StampedPose{tick.timestamp, Compose(start, EmbedPlanar(odom))});
  }
  return out;
}

PoseTrajectory GroundTruthTrajectory(const SensorLog& log) {
  PoseTrajectory out;
  for (const auto& e : log.events) {
    if (!out.empty() && out.back().time == e.time) continue;
    out.push_back(StampedPose{e.time, e.ground_truth});
  }
  return out;
}

namespace {

// Chains scan-to-submap registrations. Each keyframe is matched against the
// previous `submap_keyframes` scans placed at their refined poses, starting
// from the refined previous pose advanced by the wheel odometry increment.
// Returns how many keyframes kept the wheel estimate.
std::size_t RefineWithScanMatching(const LogMappingOptions& options,
                                   std::vector<Keyframe>* keyframes) {
  std::size_t fallbacks = 0;
  std::vector<Pose3d> refined;
  refined.reserve(keyframes->size());
  for (std::size_t k = 0; k < keyframes->size(); ++k) {
    Keyframe& kf = (*keyframes)[k];
    if (k == 0) {
      refined.push_back(kf.odometry);
      continue;
    }
    const Pose3d guess = Compose(
        refined.back(), Between((*keyframes)[k - 1].odometry, kf.odometry));
    PointCloud submap;
    const std::size_t first =
        k > options.submap_keyframes ? k - options.submap_keyframes : 0;
    for (std::size_t i = first; i < k; ++i) {
      for (const auto& p : TransformCloud(refined[i], (*keyframes)[i].scan)) {
        submap.push_back(p);
      }
    }
    PointCloud source;
    for (const auto& p : kf.scan) {
      if (p.z() >= options.odometry_min_point_z) source.push_back(p);
    }
    Pose3d pose = guess;
    try {
      const MapIndex target(submap, options.graph.map_voxel);
      const IcpResult icp =
          Register(VoxelDownsample(source, options.odometry_source_voxel),
                   target, guess, options.odometry_icp);
      if (icp.converged) {
        pose = WithPlanar(ProjectPlanar(icp.transform), guess);
      } else {
        ++fallbacks;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInsufficientOverlap &&
          e.code() != ErrorCode::kDegenerateGeometry &&
          e.code() != ErrorCode::kEmptyInput) {
        throw;
      }
      ++fallbacks;
    }
    refined.push_back(pose);
  }
  for (std::size_t k = 0; k < keyframes->size(); ++k) {
    (*keyframes)[k].odometry = refined[k];
  }
  return fallbacks;
}

}  // namespace

LogMappingResult BuildMapFromLog(const SensorLog& log,
                                 const LogMappingOptions& options) {
  const PoseTrajectory odometry = OdometryTrajectory(log);
  auto odom_at = [&](double t) {
    return odometry.empty() ? log.initial_pose() : InterpolatePose(odometry, t);
  };

  std::vector<Keyframe> keyframes;
  std::vector<GpsDatum> gps;
  std::vector<double> keyframe_times;
  std::optional<GpsFix> pending_fix;
  std::optional<Pose3d> last_keyframe;
  for (const auto& e : log.events) {
    if (e.type == EventType::kGps) {
      if (options.use_gps) pending_fix = log.gps[e.index];
      continue;
    }
    if (e.type != EventType::kScan) continue;
    const Pose3d pose = odom_at(e.time);
    const bool gps_here =
        pending_fix &&
        std::abs(pending_fix->time - e.time) <= options.gps_time_tolerance;
    bool take = !last_keyframe || gps_here;
    if (last_keyframe) {
      const Pose3d moved = Between(*last_keyframe, pose);
      take = take || moved.translation().norm() >= options.keyframe_distance ||
             RotationAngle(moved.rotation()) >= options.keyframe_angle;
    }
    if (!take) continue;
    if (gps_here) {
      gps.push_back(GpsDatum{keyframes.size(), pending_fix->position});
      pending_fix.reset();
    }
    keyframes.push_back(
        Keyframe{pose, VoxelDownsample(log.scans[e.index], options.scan_voxel)});
    keyframe_times.push_back(e.time);
    last_keyframe = pose;
  }

  LogMappingResult result;
  if (options.lidar_odometry) {
    result.odometry_fallbacks = RefineWithScanMatching(options, &keyframes);
  }
  result.build = BuildMap(keyframes, gps, options.graph);
  result.keyframes = keyframes.size();
  result.gps_edges = gps.size();
  for (std::size_t k = 0; k < keyframes.size(); ++k) {
    result.keyframe_trajectory.push_back(
        StampedPose{keyframe_times[k], result.build.trajectory[k]});
  }
  return result;
}

LocalizeResult LocalizeLog(const MapIndex& map, const SensorLog& log,
                           const LocalizeOptions& options) {
  const LocalizerConfig& config = options.config;
  config.Validate();
  log.sensors.encoder.Validate();
  LocalizeResult result;
  LocalizerState state =
      Initialize(map, log.initial_pose(), config, log.events.front().time);

  Pose2d odom;
  bool have_tick = false;
  double last_tick_time = 0.0;
  std::optional<GpsFix> last_fix;
  for (const auto& e : log.events) {
    switch (e.type) {
      case EventType::kEncoder: {
        const auto& tick = log.ticks[e.index];
        if (have_tick && !(tick.timestamp > last_tick_time)) {
          throw Error(ErrorCode::kOrdering, "encoder stream out of order");
        }
        const WheelDistances d = TickToDistances(log.sensors.encoder, tick);
        odom = Integrate(odom, d.left, d.right, log.sensors.encoder.wheel_base);
        have_tick = true;
        last_tick_time = tick.timestamp;
        OdometryUpdate update =
            OnOdometry(state, EmbedPlanar(odom), e.time, config);
        state = std::move(update.state);
        result.fused.push_back(StampedPose{e.time, update.fused_pose});
        break;
      }
      case EventType::kGps:
        last_fix = log.gps[e.index];
        break;
      case EventType::kScan: {
        const PointCloud& raw = log.scans[e.index];
        const PointCloud scan = options.half_fov
                                    ? MaskHorizontalFov(raw, std::numbers::pi)
                                    : raw;
        const auto start = std::chrono::steady_clock::now();
        try {
          ScanUpdate update = OnScan(state, scan, e.time, map, config);
          result.timing.Add(std::chrono::duration<double>(
                                std::chrono::steady_clock::now() - start)
                                .count());
          state = std::move(update.state);
          if (update.status == ScanStatus::kAccepted) {
            ++result.accepted_scans;
            result.lidar.push_back(StampedPose{e.time, update.lidar_pose});
          } else {
            ++result.rejected_scans;
          }
        } catch (const Error& err) {
          result.timing.Add(std::chrono::duration<double>(
                                std::chrono::steady_clock::now() - start)
                                .count());
          if (err.code() != ErrorCode::kLostLocalization || !options.use_gps ||
              !last_fix) {
            throw;
          }
          ++result.rejected_scans;
          ++result.recoveries;
          // Re-seed at the GPS position keeping the fused attitude.
          const Pose3d& fused = state.fused_pose;
          const Pose3d seed(fused.rotation(),
                            Eigen::Vector3d(last_fix->position.x(),
                                            last_fix->position.y(),
                                            fused.translation().z()));
          LocalizerState fresh = Initialize(map, seed, config, state.fused_timestamp);
          fresh.have_odometry = state.have_odometry;
          fresh.last_odom = state.last_odom;
          fresh.last_odom_time = state.last_odom_time;
          fresh.odom_at_last_lidar = state.last_odom;
          state = std::move(fresh);
        }
        break;
      }
    }
  }
  return result;
}

}  // namespace ptloc
