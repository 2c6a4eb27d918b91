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

#include "ptloc/icp.h"

#include <cmath>

namespace ptloc {
namespace {

double HalfSquaredSum(const std::vector<Correspondence>& pairs) {
  double j = 0.0;
  for (const auto& c : pairs) j += c.error.squaredNorm();
  return 0.5 * j;
}

}  // namespace

void IcpParams::Validate() const {
  if (!(delta > 0.0) || max_iterations < 1 || !(translation_epsilon > 0.0) ||
      !(rotation_epsilon > 0.0)) {
    throw Error(ErrorCode::kInvalidParameter, "invalid ICP parameters");
  }
}

std::vector<Correspondence> Correspondences(const PointCloud& source,
                                            const MapIndex& target,
                                            const Pose3d& guess, double delta,
                                            const Ball* region) {
  if (!(delta > 0.0)) {
    throw Error(ErrorCode::kInvalidParameter, "delta must be positive");
  }
  if (target.empty()) throw Error(ErrorCode::kEmptyInput, "empty target");
  const Eigen::Matrix3d r = guess.rotation().toRotationMatrix();
  std::vector<Correspondence> out;
  out.reserve(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Eigen::Vector3d moved = r * source[i] + guess.translation();
    // Any match closer than delta to a point this deep inside the region is
    // inside it too, so the region test can be skipped.
    const bool interior =
        region != nullptr &&
        (moved - region->center).norm() + delta <= region->radius;
    if (const auto nn =
            target.NearestWithin(moved, delta, interior ? nullptr : region)) {
      out.push_back(Correspondence{i, nn->point, nn->point - moved});
    }
  }
  return out;
}

Pose3d SolveRt(
    const std::vector<std::pair<Eigen::Vector3d, Eigen::Vector3d>>& pairs) {
  return SolveRigidTransform<double>(pairs);
}

IcpResult Register(const PointCloud& source, const MapIndex& target,
                   const Pose3d& guess, const IcpParams& params,
                   const Ball* region) {
  params.Validate();
  if (target.empty()) throw Error(ErrorCode::kEmptyInput, "empty target");
  if (source.size() < params.min_inliers) {
    throw Error(ErrorCode::kInsufficientOverlap,
                "source has fewer points than min_inliers");
  }

  IcpResult result;
  Pose3d current = guess;
  std::vector<std::pair<Eigen::Vector3d, Eigen::Vector3d>> pairs;
  for (int iteration = 1; iteration <= params.max_iterations; ++iteration) {
    const auto matches =
        Correspondences(source, target, current, params.delta, region);
    if (matches.size() < params.min_inliers) {
      throw Error(ErrorCode::kInsufficientOverlap,
                  std::to_string(matches.size()) + " inliers at iteration " +
                      std::to_string(iteration));
    }
    result.cost_history.push_back(HalfSquaredSum(matches));

    // Solve for the increment on the already-moved source points.
    pairs.clear();
    for (const auto& m : matches) {
      pairs.emplace_back(m.target_point - m.error, m.target_point);
    }
    const Pose3d step = SolveRt(pairs);
    current = Compose(step, current);
    result.iterations = iteration;

    if (step.translation().norm() < params.translation_epsilon &&
        RotationAngle(step.rotation()) < params.rotation_epsilon) {
      result.converged = true;
      break;
    }
  }

  const auto final_matches =
      Correspondences(source, target, current, params.delta, region);
  if (final_matches.size() < params.min_inliers) {
    throw Error(ErrorCode::kInsufficientOverlap,
                std::to_string(final_matches.size()) + " inliers at result");
  }
  result.transform = current;
  result.final_cost = HalfSquaredSum(final_matches);
  result.inlier_count = final_matches.size();
  result.inlier_indices.reserve(final_matches.size());
  for (const auto& m : final_matches) {
    result.inlier_indices.push_back(m.source_index);
  }
  return result;
}

}  // namespace ptloc
