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

#ifndef PTLOC_GRAPH_H_
#define PTLOC_GRAPH_H_

#include <cstddef>
#include <limits>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "Eigen/Core"
#include "ptloc/cloud.h"
#include "ptloc/geom.h"
#include "ptloc/icp.h"

namespace ptloc {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Matrix36d = Eigen::Matrix<double, 3, 6>;

// Tangent-space ordering used throughout the graph: [translation; rotation].
// A perturbation d is applied on the right:
//   pose (+) d = pose * (Exp(d.tail<3>()), d.head<3>()).
Pose3d Retract(const Pose3d& pose, const Vector6d& delta);

struct PoseNode {
  int id = 0;
  Pose3d estimate;
  bool fixed = false;
};

// Relative-pose constraint from odometry (Z_k, H_k).
struct OdometryEdge {
  int from_id = 0;
  int to_id = 0;
  Pose3d measured_relative;
  Matrix6d information = Matrix6d::Identity();
};

// Same shape as odometry; produced by scan registration between
// non-consecutive nodes.
struct LoopEdge {
  int from_id = 0;
  int to_id = 0;
  Pose3d measured_relative;
  Matrix6d information = Matrix6d::Identity();
};

// Absolute position fix on a node's antenna.
struct GpsEdge {
  int node_id = 0;
  Eigen::Vector3d measured_position = Eigen::Vector3d::Zero();
  Eigen::Matrix3d information = Eigen::Matrix3d::Identity();
};

class PoseGraph {
 public:
  void AddNode(int id, const Pose3d& estimate, bool fixed = false);
  void AddOdometryEdge(const OdometryEdge& edge);
  void AddLoopEdge(const LoopEdge& edge);
  void AddGpsEdge(const GpsEdge& edge);

  bool HasNode(int id) const { return slot_.count(id) != 0; }
  // Throws kReference for unknown ids.
  const PoseNode& node(int id) const;
  void SetEstimate(int id, const Pose3d& estimate);

  const std::vector<PoseNode>& nodes() const { return nodes_; }
  const std::vector<OdometryEdge>& odometry_edges() const { return odometry_; }
  const std::vector<LoopEdge>& loop_edges() const { return loops_; }
  const std::vector<GpsEdge>& gps_edges() const { return gps_; }

  // Antenna position in the node frame. Only the translation is used.
  const Pose3d& lever_arm() const { return lever_arm_; }
  void set_lever_arm(const Pose3d& lever_arm) { lever_arm_ = lever_arm; }

 private:
  std::vector<PoseNode> nodes_;
  std::unordered_map<int, std::size_t> slot_;
  std::vector<OdometryEdge> odometry_;
  std::vector<LoopEdge> loops_;
  std::vector<GpsEdge> gps_;
  Pose3d lever_arm_;
};

// Discrepancy D = Z^-1 * (from^-1 * to); returns [t(D); rotvec(R(D))].
Vector6d RelativeResidual(const Pose3d& from, const Pose3d& to,
                          const Pose3d& measured);
// d residual / d perturbation of `from` and of `to`.
std::pair<Matrix6d, Matrix6d> RelativeJacobians(const Pose3d& from,
                                                const Pose3d& to,
                                                const Pose3d& measured);

Eigen::Vector3d GpsResidual(const Pose3d& node, const Eigen::Vector3d& measured,
                            const Eigen::Vector3d& lever);
Matrix36d GpsJacobian(const Pose3d& node, const Eigen::Vector3d& lever);

Vector6d Residual(const OdometryEdge& edge, const PoseGraph& graph);
Vector6d Residual(const LoopEdge& edge, const PoseGraph& graph);
Eigen::Vector3d Residual(const GpsEdge& edge, const PoseGraph& graph);

// F(p) = sum_k e_k^T H_k e_k over every edge.
double TotalCost(const PoseGraph& graph);

struct LmOptions {
  int max_iterations = 100;
  double lambda_init = 1e-3;
  double relative_decrease_tolerance = 1e-9;
  double step_tolerance = 1e-10;
};

enum class LmTermination {
  kMaxIterations,
  kRelativeDecrease,
  kSmallStep,
  kZeroCost,
  kNoFreeNodes,
  kDampingExhausted,
};

struct LmReport {
  // F(p) at the start and after every accepted step.
  std::vector<double> accepted_costs;
  int iterations = 0;
  int accepted_steps = 0;
  double final_lambda = 0.0;
  LmTermination termination = LmTermination::kMaxIterations;

  double initial_cost() const { return accepted_costs.front(); }
  double final_cost() const { return accepted_costs.back(); }
};

// Levenberg-Marquardt on the free nodes of `graph`, in place. Steps that do
// not lower F(p) are rejected and the damping grows x4; accepted steps shrink
// it x0.5. Throws kGaugeFreedom if some connected component has neither a
// fixed node nor a GPS edge, kInvalidEdge for a non-SPD information matrix.
LmReport Optimize(PoseGraph* graph, const LmOptions& options = {});

// Index pairs (i, j), i < j, j - i >= min_index_gap, whose translations lie
// closer than `radius`.
std::vector<std::pair<std::size_t, std::size_t>> DetectLoopCandidates(
    const std::vector<PoseNode>& trajectory, double radius,
    std::size_t min_index_gap);

struct Keyframe {
  Pose3d odometry;   // front-end estimate, map frame
  PointCloud scan;   // sensor frame
};

struct GpsDatum {
  std::size_t keyframe = 0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
};

struct MapBuildParams {
  // Odometry translation sigma grows with the distance travelled.
  double odometry_sigma_per_meter = 0.05;
  double odometry_min_distance = 0.2;  // m, floor for the above
  double odometry_rotation_sigma = 0.01;  // rad
  double gps_sigma = 0.02;  // m
  double loop_translation_sigma = 0.05;  // m
  double loop_rotation_sigma = 0.01;  // rad

  bool detect_loops = true;
  double loop_radius = 3.0;
  std::size_t loop_min_index_gap = 20;
  // At most one verified loop edge per this many keyframes.
  std::size_t loop_stride = 5;
  double loop_scan_voxel = 0.3;
  // Target of a loop match: keyframe i's scan plus this many neighbours on
  // each side, placed by their estimates.
  std::size_t loop_submap_keyframes = 0;
  // Source points of the later keyframe below this height (its own frame) are
  // dropped. When finite, the match only decides x, y and yaw; height, roll
  // and pitch come from the current estimates.
  double loop_min_point_z = -std::numeric_limits<double>::infinity();
  IcpParams loop_icp = [] {
    IcpParams p;
    p.delta = 1.0;
    p.min_inliers = 50;
    return p;
  }();

  double map_voxel = 0.2;
  Pose3d lever_arm;
  LmOptions lm;
};

struct MapBuildResult {
  PoseGraph graph;
  std::vector<Pose3d> trajectory;
  PointCloud map;
  LmReport report;
  std::size_t loop_candidates = 0;
  std::size_t loop_edges = 0;
};

// Odometry chain + GPS fixes, optimized once; loop candidates are then
// searched and verified by registration around the optimized poses, and the
// graph is optimized again with the accepted loop edges. The optimized scans
// are merged into a voxel-sparsified map. Without any GPS fix the first
// keyframe is held fixed.
MapBuildResult BuildMap(const std::vector<Keyframe>& keyframes,
                        const std::vector<GpsDatum>& gps,
                        const MapBuildParams& params);

// ASCII dump, one record per line:
//   NODE id tx ty tz qx qy qz qw [FIXED]
//   EDGE_ODOM i j tx ty tz qx qy qz qw <21 upper-triangular information>
//   EDGE_LOOP i j ... (as EDGE_ODOM)
//   EDGE_GPS i gx gy gz <6 upper-triangular information>
void SaveGraph(const std::string& path, const PoseGraph& graph);
PoseGraph LoadGraph(const std::string& path);

}  // namespace ptloc

#endif  // PTLOC_GRAPH_H_
