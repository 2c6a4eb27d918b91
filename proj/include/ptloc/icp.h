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

#ifndef PTLOC_ICP_H_
#define PTLOC_ICP_H_

#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "Eigen/Core"
#include "Eigen/SVD"
#include "ptloc/cloud.h"
#include "ptloc/error.h"
#include "ptloc/geom.h"

namespace ptloc {

struct IcpParams {
  double delta = 1.0;  // correspondence rejection threshold, m
  int max_iterations = 50;
  double translation_epsilon = 1e-4;  // m
  double rotation_epsilon = 1e-4;     // rad
  std::size_t min_inliers = 10;

  void Validate() const;
};

struct IcpResult {
  Pose3d transform;        // source -> target frame
  double final_cost = 0.0; // J over inliers at `transform`, m^2
  std::size_t inlier_count = 0;
  int iterations = 0;
  bool converged = false;
  // Source indices gated in at `transform`, ascending.
  std::vector<std::size_t> inlier_indices;
  // J over the inliers of each iteration, evaluated before its update.
  std::vector<double> cost_history;
};

struct Correspondence {
  std::size_t source_index;
  Eigen::Vector3d target_point;
  // target_point - guess * source_point
  Eigen::Vector3d error;
};

// Nearest-neighbor pairing of `guess * source` against `target`, or against
// the part of it inside `region`. Pairs whose post-transform distance is
// >= delta are dropped.
std::vector<Correspondence> Correspondences(const PointCloud& source,
                                            const MapIndex& target,
                                            const Pose3d& guess, double delta,
                                            const Ball* region = nullptr);

// Least-squares rigid transform T minimizing sum |target_i - T source_i|^2.
// Centroid alignment plus an SVD of the cross-covariance, with the sign of the
// last singular direction flipped when needed so det(R) = +1. Throws
// kDegenerateGeometry for fewer than 3 pairs or collinear sources.
template <typename Scalar>
Pose3<Scalar> SolveRigidTransform(
    const std::vector<std::pair<Vector3<Scalar>, Vector3<Scalar>>>& pairs) {
  using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
  using Vec3 = Vector3<Scalar>;
  if (pairs.size() < 3) {
    throw Error(ErrorCode::kDegenerateGeometry,
                "need at least 3 point pairs, got " +
                    std::to_string(pairs.size()));
  }
  Vec3 source_mean = Vec3::Zero();
  Vec3 target_mean = Vec3::Zero();
  for (const auto& [s, t] : pairs) {
    source_mean += s;
    target_mean += t;
  }
  source_mean /= Scalar(pairs.size());
  target_mean /= Scalar(pairs.size());

  Mat3 cross = Mat3::Zero();
  Mat3 scatter = Mat3::Zero();
  for (const auto& [s, t] : pairs) {
    const Vec3 sc = s - source_mean;
    cross += (t - target_mean) * sc.transpose();
    scatter += sc * sc.transpose();
  }

  // Collinear (or coincident) sources leave rotation about the line free.
  const Eigen::JacobiSVD<Mat3> scatter_svd(scatter);
  const Vec3 spread = scatter_svd.singularValues();
  if (!(spread(0) > Scalar(0)) ||
      spread(1) <= spread(0) * std::numeric_limits<Scalar>::epsilon() * 1e3) {
    throw Error(ErrorCode::kDegenerateGeometry, "collinear point pairs");
  }

  const Eigen::JacobiSVD<Mat3> svd(cross,
                                   Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 sign = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < Scalar(0)) {
    sign(2, 2) = Scalar(-1);
  }
  const Mat3 rotation = svd.matrixU() * sign * svd.matrixV().transpose();
  const Vec3 translation = target_mean - rotation * source_mean;
  return Pose3<Scalar>(Eigen::Quaternion<Scalar>(rotation), translation);
}

Pose3d SolveRt(const std::vector<std::pair<Eigen::Vector3d, Eigen::Vector3d>>&
                   pairs);

// Trimmed point-to-point ICP. Throws kInsufficientOverlap when an iteration
// gates in fewer than params.min_inliers pairs.
IcpResult Register(const PointCloud& source, const MapIndex& target,
                   const Pose3d& guess, const IcpParams& params,
                   const Ball* region = nullptr);

}  // namespace ptloc

#endif  // PTLOC_ICP_H_
