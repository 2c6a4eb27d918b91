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

#include "ptloc/graph.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "Eigen/Cholesky"
#include "Eigen/Sparse"
#include "Eigen/SparseCholesky"
#include "ptloc/error.h"

namespace ptloc {
namespace {

Eigen::Matrix3d Skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(),  //
      v.z(), 0.0, -v.x(),   //
      -v.y(), v.x(), 0.0;
  return m;
}

// Inverse of the right Jacobian of SO(3) at rotation vector `w`.
Eigen::Matrix3d RightJacobianInverse(const Eigen::Vector3d& w) {
  const double angle = w.norm();
  const Eigen::Matrix3d wx = Skew(w);
  double c;
  if (angle < 1e-5) {
    c = 1.0 / 12.0 + angle * angle / 720.0;
  } else {
    c = 1.0 / (angle * angle) -
        (1.0 + std::cos(angle)) / (2.0 * angle * std::sin(angle));
  }
  return Eigen::Matrix3d::Identity() + 0.5 * wx + c * wx * wx;
}

template <int N>
void CheckInformation(const Eigen::Matrix<double, N, N>& info) {
  if (!info.allFinite() ||
      (info - info.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
    throw Error(ErrorCode::kInvalidEdge, "information matrix not symmetric");
  }
  Eigen::LLT<Eigen::Matrix<double, N, N>> llt(info);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kInvalidEdge,
                "information matrix not positive definite");
  }
}

// Disjoint-set over node slots, used for the gauge check.
struct DisjointSet {
  explicit DisjointSet(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), std::size_t{0});
  }
  std::size_t Find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void Union(std::size_t a, std::size_t b) { parent[Find(a)] = Find(b); }
  std::vector<std::size_t> parent;
};

}  // namespace

Pose3d Retract(const Pose3d& pose, const Vector6d& delta) {
  const Eigen::Vector3d dt = delta.head<3>();
  const Eigen::Vector3d dr = delta.tail<3>();
  return Compose(pose, Pose3d(QuaternionFromRotationVector(dr), dt));
}

void PoseGraph::AddNode(int id, const Pose3d& estimate, bool fixed) {
  if (HasNode(id)) {
    throw Error(ErrorCode::kInvalidParameter,
                "duplicate node id " + std::to_string(id));
  }
  slot_.emplace(id, nodes_.size());
  nodes_.push_back(PoseNode{id, estimate, fixed});
}

const PoseNode& PoseGraph::node(int id) const {
  const auto it = slot_.find(id);
  if (it == slot_.end()) {
    throw Error(ErrorCode::kReference, "unknown node id " + std::to_string(id));
  }
  return nodes_[it->second];
}

void PoseGraph::SetEstimate(int id, const Pose3d& estimate) {
  node(id);
  nodes_[slot_.at(id)].estimate = estimate;
}

void PoseGraph::AddOdometryEdge(const OdometryEdge& edge) {
  node(edge.from_id);
  node(edge.to_id);
  CheckInformation<6>(edge.information);
  odometry_.push_back(edge);
}

void PoseGraph::AddLoopEdge(const LoopEdge& edge) {
  node(edge.from_id);
  node(edge.to_id);
  if (std::abs(edge.from_id - edge.to_id) <= 1) {
    throw Error(ErrorCode::kInvalidParameter,
                "loop edge must join non-consecutive nodes");
  }
  CheckInformation<6>(edge.information);
  loops_.push_back(edge);
}

void PoseGraph::AddGpsEdge(const GpsEdge& edge) {
  node(edge.node_id);
  CheckInformation<3>(edge.information);
  gps_.push_back(edge);
}

Vector6d RelativeResidual(const Pose3d& from, const Pose3d& to,
                          const Pose3d& measured) {
  const Pose3d discrepancy = Compose(measured.inverse(), Between(from, to));
  Vector6d e;
  e.head<3>() = discrepancy.translation();
  e.tail<3>() = RotationVector(discrepancy.rotation());
  return e;
}

std::pair<Matrix6d, Matrix6d> RelativeJacobians(const Pose3d& from,
                                                const Pose3d& to,
                                                const Pose3d& measured) {
  const Eigen::Matrix3d ri = from.rotation().toRotationMatrix();
  const Eigen::Matrix3d rj = to.rotation().toRotationMatrix();
  const Eigen::Matrix3d rz_t =
      measured.rotation().toRotationMatrix().transpose();
  const Eigen::Vector3d rel_t =
      ri.transpose() * (to.translation() - from.translation());
  const Eigen::Vector3d e_rot =
      RotationVector(measured.rotation().conjugate() *
                     from.rotation().conjugate() * to.rotation());
  const Eigen::Matrix3d jr_inv = RightJacobianInverse(e_rot);

  Matrix6d j_from = Matrix6d::Zero();
  j_from.block<3, 3>(0, 0) = -rz_t;
  j_from.block<3, 3>(0, 3) = rz_t * Skew(rel_t);
  j_from.block<3, 3>(3, 3) = -jr_inv * rj.transpose() * ri;

  Matrix6d j_to = Matrix6d::Zero();
  j_to.block<3, 3>(0, 0) = rz_t * ri.transpose() * rj;
  j_to.block<3, 3>(3, 3) = jr_inv;
  return {j_from, j_to};
}

Eigen::Vector3d GpsResidual(const Pose3d& node, const Eigen::Vector3d& measured,
                            const Eigen::Vector3d& lever) {
  return Apply(node, lever) - measured;
}

Matrix36d GpsJacobian(const Pose3d& node, const Eigen::Vector3d& lever) {
  const Eigen::Matrix3d r = node.rotation().toRotationMatrix();
  Matrix36d j;
  j.block<3, 3>(0, 0) = r;
  j.block<3, 3>(0, 3) = -r * Skew(lever);
  return j;
}

Vector6d Residual(const OdometryEdge& edge, const PoseGraph& graph) {
  return RelativeResidual(graph.node(edge.from_id).estimate,
                          graph.node(edge.to_id).estimate,
                          edge.measured_relative);
}

Vector6d Residual(const LoopEdge& edge, const PoseGraph& graph) {
  return RelativeResidual(graph.node(edge.from_id).estimate,
                          graph.node(edge.to_id).estimate,
                          edge.measured_relative);
}

Eigen::Vector3d Residual(const GpsEdge& edge, const PoseGraph& graph) {
  return GpsResidual(graph.node(edge.node_id).estimate, edge.measured_position,
                     graph.lever_arm().translation());
}

double TotalCost(const PoseGraph& graph) {
  double cost = 0.0;
  for (const auto& e : graph.odometry_edges()) {
    const Vector6d r = Residual(e, graph);
    cost += r.dot(e.information * r);
  }
  for (const auto& e : graph.loop_edges()) {
    const Vector6d r = Residual(e, graph);
    cost += r.dot(e.information * r);
  }
  for (const auto& e : graph.gps_edges()) {
    const Eigen::Vector3d r = Residual(e, graph);
    cost += r.dot(e.information * r);
  }
  return cost;
}

namespace {

void CheckGauge(const PoseGraph& graph) {
  const auto& nodes = graph.nodes();
  std::unordered_map<int, std::size_t> slot;
  for (std::size_t i = 0; i < nodes.size(); ++i) slot[nodes[i].id] = i;
  DisjointSet sets(nodes.size());
  for (const auto& e : graph.odometry_edges()) {
    sets.Union(slot.at(e.from_id), slot.at(e.to_id));
  }
  for (const auto& e : graph.loop_edges()) {
    sets.Union(slot.at(e.from_id), slot.at(e.to_id));
  }
  std::vector<bool> anchored(nodes.size(), false);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].fixed) anchored[sets.Find(i)] = true;
  }
  for (const auto& e : graph.gps_edges()) {
    anchored[sets.Find(slot.at(e.node_id))] = true;
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!nodes[i].fixed && !anchored[sets.Find(i)]) {
      throw Error(ErrorCode::kGaugeFreedom,
                  "node " + std::to_string(nodes[i].id) +
                      " is not anchored by a fixed node or GPS edge");
    }
  }
}

class NormalEquations {
 public:
  NormalEquations(const PoseGraph& graph, const std::vector<int>& variable)
      : graph_(&graph), variable_(&variable) {
    std::size_t free = 0;
    for (int v : variable) free += v >= 0 ? 1 : 0;
    dim_ = 6 * free;
    gradient_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
  }

  void AddRelative(std::size_t from_slot, std::size_t to_slot,
                   const Pose3d& measured, const Matrix6d& information) {
    const Pose3d& from = graph_->nodes()[from_slot].estimate;
    const Pose3d& to = graph_->nodes()[to_slot].estimate;
    const Vector6d r = RelativeResidual(from, to, measured);
    const auto [j_from, j_to] = RelativeJacobians(from, to, measured);
    const int vars[2] = {(*variable_)[from_slot], (*variable_)[to_slot]};
    const Matrix6d* jacobians[2] = {&j_from, &j_to};
    for (int a = 0; a < 2; ++a) {
      if (vars[a] < 0) continue;
      const Eigen::Matrix<double, 6, 6> jt_info =
          jacobians[a]->transpose() * information;
      gradient_.segment<6>(6 * vars[a]) += jt_info * r;
      for (int b = 0; b < 2; ++b) {
        if (vars[b] < 0) continue;
        AddBlock(vars[a], vars[b], jt_info * *jacobians[b]);
      }
    }
  }

  void AddGps(std::size_t slot, const GpsEdge& edge) {
    const int var = (*variable_)[slot];
    if (var < 0) return;
    const Pose3d& pose = graph_->nodes()[slot].estimate;
    const Eigen::Vector3d lever = graph_->lever_arm().translation();
    const Eigen::Vector3d r = GpsResidual(pose, edge.measured_position, lever);
    const Matrix36d j = GpsJacobian(pose, lever);
    const Eigen::Matrix<double, 6, 3> jt_info = j.transpose() * edge.information;
    gradient_.segment<6>(6 * var) += jt_info * r;
    AddBlock(var, var, jt_info * j);
  }

  // Solves (H + lambda I) dx = -g.
  bool Solve(double lambda, Eigen::VectorXd* step) const {
    Eigen::SparseMatrix<double> h(static_cast<Eigen::Index>(dim_),
                                  static_cast<Eigen::Index>(dim_));
    std::vector<Eigen::Triplet<double>> damped = triplets_;
    for (std::size_t i = 0; i < dim_; ++i) {
      damped.emplace_back(static_cast<int>(i), static_cast<int>(i), lambda);
    }
    h.setFromTriplets(damped.begin(), damped.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(h);
    if (solver.info() != Eigen::Success) return false;
    *step = solver.solve(-gradient_);
    return solver.info() == Eigen::Success && step->allFinite();
  }

 private:
  void AddBlock(int row_var, int col_var, const Matrix6d& block) {
    for (int r = 0; r < 6; ++r) {
      for (int c = 0; c < 6; ++c) {
        if (block(r, c) != 0.0) {
          triplets_.emplace_back(6 * row_var + r, 6 * col_var + c, block(r, c));
        }
      }
    }
  }

  const PoseGraph* graph_;
  const std::vector<int>* variable_;
  std::size_t dim_ = 0;
  Eigen::VectorXd gradient_;
  std::vector<Eigen::Triplet<double>> triplets_;
};

PoseGraph ApplyStep(const PoseGraph& graph, const std::vector<int>& variable,
                    const Eigen::VectorXd& step) {
  PoseGraph out = graph;
  const auto& nodes = graph.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (variable[i] < 0) continue;
    const Vector6d d = step.segment<6>(6 * variable[i]);
    out.SetEstimate(nodes[i].id, Retract(nodes[i].estimate, d));
  }
  return out;
}

}  // namespace

LmReport Optimize(PoseGraph* graph, const LmOptions& options) {
  if (options.max_iterations < 0 || !(options.lambda_init > 0.0)) {
    throw Error(ErrorCode::kInvalidParameter, "invalid LM options");
  }
  for (const auto& e : graph->odometry_edges()) CheckInformation<6>(e.information);
  for (const auto& e : graph->loop_edges()) CheckInformation<6>(e.information);
  for (const auto& e : graph->gps_edges()) CheckInformation<3>(e.information);
  CheckGauge(*graph);

  const auto& nodes = graph->nodes();
  std::unordered_map<int, std::size_t> slot;
  std::vector<int> variable(nodes.size(), -1);
  int free_count = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    slot[nodes[i].id] = i;
    if (!nodes[i].fixed) variable[i] = free_count++;
  }

  LmReport report;
  double cost = TotalCost(*graph);
  report.accepted_costs.push_back(cost);
  double lambda = options.lambda_init;
  if (free_count == 0) {
    report.termination = LmTermination::kNoFreeNodes;
    report.final_lambda = lambda;
    return report;
  }
  if (cost == 0.0) {
    report.termination = LmTermination::kZeroCost;
    report.final_lambda = lambda;
    return report;
  }

  auto linearize = [&] {
    NormalEquations eq(*graph, variable);
    for (const auto& e : graph->odometry_edges()) {
      eq.AddRelative(slot.at(e.from_id), slot.at(e.to_id), e.measured_relative,
                     e.information);
    }
    for (const auto& e : graph->loop_edges()) {
      eq.AddRelative(slot.at(e.from_id), slot.at(e.to_id), e.measured_relative,
                     e.information);
    }
    for (const auto& e : graph->gps_edges()) eq.AddGps(slot.at(e.node_id), e);
    return eq;
  };

  NormalEquations equations = linearize();
  report.termination = LmTermination::kMaxIterations;
  for (int iteration = 1; iteration <= options.max_iterations; ++iteration) {
    report.iterations = iteration;
    Eigen::VectorXd step;
    if (!equations.Solve(lambda, &step)) {
      lambda *= 4.0;
      continue;
    }
    if (step.norm() < options.step_tolerance) {
      report.termination = LmTermination::kSmallStep;
      break;
    }
    PoseGraph candidate = ApplyStep(*graph, variable, step);
    const double candidate_cost = TotalCost(candidate);
    if (candidate_cost < cost) {
      const double relative = (cost - candidate_cost) / cost;
      *graph = std::move(candidate);
      cost = candidate_cost;
      report.accepted_costs.push_back(cost);
      ++report.accepted_steps;
      lambda = std::max(lambda * 0.5, 1e-9);
      if (cost == 0.0) {
        report.termination = LmTermination::kZeroCost;
        break;
      }
      if (relative < options.relative_decrease_tolerance) {
        report.termination = LmTermination::kRelativeDecrease;
        break;
      }
      equations = linearize();
    } else {
      lambda *= 4.0;
      if (lambda > 1e16) {
        report.termination = LmTermination::kDampingExhausted;
        break;
      }
    }
  }
  report.final_lambda = lambda;
  return report;
}

std::vector<std::pair<std::size_t, std::size_t>> DetectLoopCandidates(
    const std::vector<PoseNode>& trajectory, double radius,
    std::size_t min_index_gap) {
  if (!(radius > 0.0)) {
    throw Error(ErrorCode::kInvalidParameter, "radius must be positive");
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const double r2 = radius * radius;
  for (std::size_t j = 0; j < trajectory.size(); ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      if (j - i < min_index_gap) break;
      if ((trajectory[i].estimate.translation() -
           trajectory[j].estimate.translation())
              .squaredNorm() < r2) {
        out.emplace_back(i, j);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

MapBuildResult BuildMap(const std::vector<Keyframe>& keyframes,
                        const std::vector<GpsDatum>& gps,
                        const MapBuildParams& params) {
  if (keyframes.empty()) throw Error(ErrorCode::kEmptyInput, "no keyframes");
  MapBuildResult result;
  PoseGraph& graph = result.graph;
  graph.set_lever_arm(params.lever_arm);

  const int n = static_cast<int>(keyframes.size());
  for (int k = 0; k < n; ++k) {
    graph.AddNode(k, keyframes[k].odometry, gps.empty() && k == 0);
  }

  const double rot_info = 1.0 / (params.odometry_rotation_sigma *
                                 params.odometry_rotation_sigma);
  for (int k = 1; k < n; ++k) {
    const Pose3d rel = Between(keyframes[k - 1].odometry, keyframes[k].odometry);
    const double sigma =
        params.odometry_sigma_per_meter *
        std::max(rel.translation().norm(), params.odometry_min_distance);
    OdometryEdge edge{k - 1, k, rel, Matrix6d::Zero()};
    edge.information.diagonal() << Eigen::Vector3d::Constant(1.0 / (sigma * sigma)),
        Eigen::Vector3d::Constant(rot_info);
    graph.AddOdometryEdge(edge);
  }

  const double gps_info = 1.0 / (params.gps_sigma * params.gps_sigma);
  for (const auto& fix : gps) {
    if (fix.keyframe >= keyframes.size()) {
      throw Error(ErrorCode::kReference, "GPS fix references keyframe " +
                                             std::to_string(fix.keyframe));
    }
    graph.AddGpsEdge(GpsEdge{static_cast<int>(fix.keyframe), fix.position,
                             gps_info * Eigen::Matrix3d::Identity()});
  }

  result.report = Optimize(&graph, params.lm);
  if (params.detect_loops) {
    std::vector<Pose3d> estimate(n);
    for (int k = 0; k < n; ++k) estimate[k] = graph.node(k).estimate;
    const auto candidates = DetectLoopCandidates(
        graph.nodes(), params.loop_radius, params.loop_min_index_gap);
    result.loop_candidates = candidates.size();
    auto distance = [&](std::size_t a, std::size_t b) {
      return (estimate[a].translation() - estimate[b].translation()).norm();
    };
    // Closest earlier partner per later keyframe.
    std::map<std::size_t, std::size_t> partner;
    for (const auto& [i, j] : candidates) {
      const auto it = partner.find(j);
      if (it == partner.end() || distance(i, j) < distance(it->second, j)) {
        partner[j] = i;
      }
    }
    const bool planar = std::isfinite(params.loop_min_point_z);
    std::size_t last_j = 0;
    bool any = false;
    const double loop_t_info = 1.0 / (params.loop_translation_sigma *
                                      params.loop_translation_sigma);
    const double loop_r_info =
        1.0 / (params.loop_rotation_sigma * params.loop_rotation_sigma);
    for (const auto& [j, i] : partner) {
      if (any && j - last_j < params.loop_stride) continue;
      // Submap in keyframe i's frame.
      PointCloud submap;
      const std::size_t first =
          i > params.loop_submap_keyframes ? i - params.loop_submap_keyframes : 0;
      const std::size_t last =
          std::min<std::size_t>(n - 1, i + params.loop_submap_keyframes);
      for (std::size_t k = first; k <= last; ++k) {
        const Pose3d to_i = Between(estimate[i], estimate[k]);
        for (const auto& p : keyframes[k].scan) submap.push_back(Apply(to_i, p));
      }
      PointCloud source;
      for (const auto& p : keyframes[j].scan) {
        if (p.z() >= params.loop_min_point_z) source.push_back(p);
      }
      if (submap.empty() || source.empty()) continue;
      const MapIndex target(submap, params.loop_scan_voxel);
      const Pose3d guess = Between(estimate[i], estimate[j]);
      try {
        const IcpResult icp =
            Register(VoxelDownsample(source, params.loop_scan_voxel), target,
                     guess, params.loop_icp);
        if (!icp.converged || icp.inlier_count < params.loop_icp.min_inliers) {
          continue;
        }
        Pose3d measured = icp.transform;
        if (planar) {
          const Pose3d& tilt = guess;
          measured = Pose3d(YawRotation(Yaw(measured.rotation())) *
                                YawRotation(-Yaw(tilt.rotation())) *
                                tilt.rotation(),
                            Eigen::Vector3d(measured.translation().x(),
                                            measured.translation().y(),
                                            tilt.translation().z()));
        }
        LoopEdge edge{static_cast<int>(i), static_cast<int>(j), measured,
                      Matrix6d::Zero()};
        edge.information.diagonal()
            << Eigen::Vector3d::Constant(loop_t_info),
            Eigen::Vector3d::Constant(loop_r_info);
        graph.AddLoopEdge(edge);
        ++result.loop_edges;
        last_j = j;
        any = true;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kInsufficientOverlap &&
            e.code() != ErrorCode::kDegenerateGeometry) {
          throw;
        }
      }
    }
    if (result.loop_edges > 0) result.report = Optimize(&graph, params.lm);
  }

  PointCloud merged;
  for (int k = 0; k < n; ++k) {
    const Pose3d& pose = graph.node(k).estimate;
    result.trajectory.push_back(pose);
    for (const auto& p : keyframes[k].scan) merged.push_back(Apply(pose, p));
  }
  result.map = merged.empty() ? merged : VoxelDownsample(merged, params.map_voxel);
  return result;
}

void SaveGraph(const std::string& path, const PoseGraph& graph) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (f == nullptr) throw Error(ErrorCode::kIo, "cannot write " + path);
  auto pose = [f](const Pose3d& p) {
    const auto& q = p.rotation();
    std::fprintf(f, " %.17g %.17g %.17g %.17g %.17g %.17g %.17g",
                 p.translation().x(), p.translation().y(), p.translation().z(),
                 q.x(), q.y(), q.z(), q.w());
  };
  auto upper = [f](const auto& m) {
    for (int r = 0; r < m.rows(); ++r) {
      for (int c = r; c < m.cols(); ++c) std::fprintf(f, " %.17g", m(r, c));
    }
  };
  const Pose3d& lever = graph.lever_arm();
  if (lever.translation() != Eigen::Vector3d::Zero() ||
      !lever.rotation().isApprox(Eigen::Quaterniond::Identity(), 0.0)) {
    std::fprintf(f, "LEVER");
    pose(lever);
    std::fprintf(f, "\n");
  }
  for (const auto& n : graph.nodes()) {
    std::fprintf(f, "NODE %d", n.id);
    pose(n.estimate);
    std::fprintf(f, n.fixed ? " FIXED\n" : "\n");
  }
  for (const auto& e : graph.odometry_edges()) {
    std::fprintf(f, "EDGE_ODOM %d %d", e.from_id, e.to_id);
    pose(e.measured_relative);
    upper(e.information);
    std::fprintf(f, "\n");
  }
  for (const auto& e : graph.gps_edges()) {
    std::fprintf(f, "EDGE_GPS %d %.17g %.17g %.17g", e.node_id,
                 e.measured_position.x(), e.measured_position.y(),
                 e.measured_position.z());
    upper(e.information);
    std::fprintf(f, "\n");
  }
  for (const auto& e : graph.loop_edges()) {
    std::fprintf(f, "EDGE_LOOP %d %d", e.from_id, e.to_id);
    pose(e.measured_relative);
    upper(e.information);
    std::fprintf(f, "\n");
  }
  if (std::fclose(f) != 0) throw Error(ErrorCode::kIo, "write failed " + path);
}

PoseGraph LoadGraph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  PoseGraph graph;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::kParse,
                path + ":" + std::to_string(line_no) + ": " + what);
  };
  auto read_pose = [&](std::istream& s) {
    double v[7];
    for (double& x : v) {
      if (!(s >> x)) fail("truncated pose");
    }
    return Pose3d(Eigen::Quaterniond(v[6], v[3], v[4], v[5]),
                  Eigen::Vector3d(v[0], v[1], v[2]));
  };
  auto read_upper = [&](std::istream& s, auto* m) {
    for (int r = 0; r < m->rows(); ++r) {
      for (int c = r; c < m->cols(); ++c) {
        if (!(s >> (*m)(r, c))) fail("truncated information matrix");
        (*m)(c, r) = (*m)(r, c);
      }
    }
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream s(line);
    std::string tag;
    s >> tag;
    if (tag == "NODE") {
      int id;
      if (!(s >> id)) fail("bad node id");
      const Pose3d p = read_pose(s);
      std::string flag;
      s >> flag;
      graph.AddNode(id, p, flag == "FIXED");
    } else if (tag == "EDGE_ODOM" || tag == "EDGE_LOOP") {
      int i, j;
      if (!(s >> i >> j)) fail("bad edge ids");
      const Pose3d z = read_pose(s);
      Matrix6d info;
      read_upper(s, &info);
      if (tag == "EDGE_ODOM") {
        graph.AddOdometryEdge(OdometryEdge{i, j, z, info});
      } else {
        graph.AddLoopEdge(LoopEdge{i, j, z, info});
      }
    } else if (tag == "EDGE_GPS") {
      int i;
      Eigen::Vector3d g;
      if (!(s >> i >> g.x() >> g.y() >> g.z())) fail("bad GPS edge");
      Eigen::Matrix3d info;
      read_upper(s, &info);
      graph.AddGpsEdge(GpsEdge{i, g, info});
    } else if (tag == "LEVER") {
      graph.set_lever_arm(read_pose(s));
    } else {
      fail("unknown record " + tag);
    }
  }
  return graph;
}

}  // namespace ptloc
