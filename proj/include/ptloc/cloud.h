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

#ifndef PTLOC_CLOUD_H_
#define PTLOC_CLOUD_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "Eigen/Core"
#include "ptloc/geom.h"

namespace ptloc {

// Unordered 3D points in meters. Non-finite coordinates are rejected on
// insertion.
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(std::vector<Eigen::Vector3d> points,
                      std::optional<double> timestamp = std::nullopt);

  void push_back(const Eigen::Vector3d& point);
  void reserve(std::size_t n) { points_.reserve(n); }

  const std::vector<Eigen::Vector3d>& points() const { return points_; }
  const Eigen::Vector3d& operator[](std::size_t i) const { return points_[i]; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  auto begin() const { return points_.begin(); }
  auto end() const { return points_.end(); }

  std::optional<double> timestamp() const { return timestamp_; }
  void set_timestamp(std::optional<double> t) { timestamp_ = t; }

 private:
  std::vector<Eigen::Vector3d> points_;
  std::optional<double> timestamp_;
};

PointCloud TransformCloud(const Pose3d& pose, const PointCloud& cloud);

struct VoxelKey {
  std::int64_t x;
  std::int64_t y;
  std::int64_t z;
  bool operator==(const VoxelKey&) const = default;
};

// floor(p / voxel_size) per axis; boundary points land in the higher voxel.
VoxelKey VoxelOf(const Eigen::Vector3d& p, double voxel_size);

// One centroid per occupied voxel, emitted in order of first occupancy.
PointCloud VoxelDownsample(const PointCloud& cloud, double voxel_size);

struct NearestResult {
  Eigen::Vector3d point;
  double distance;
  std::size_t index;
};

// Closed ball restricting map queries to a region.
struct Ball {
  Eigen::Vector3d center;
  double radius;
};

// Voxel-sparsified cloud with a balanced k-d tree over its points.
// Immutable after construction; const queries are safe to run concurrently.
class MapIndex {
 public:
  // Downsamples `cloud` at `voxel_size` and indexes the result.
  MapIndex(const PointCloud& cloud, double voxel_size);

  // Indexes `cloud` as given. The caller guarantees it is already sparse at
  // `voxel_size` (e.g. a subset of another MapIndex).
  static MapIndex FromSparse(PointCloud cloud, double voxel_size);

  const PointCloud& source() const { return source_; }
  double voxel_size() const { return voxel_size_; }
  std::size_t size() const { return source_.size(); }
  bool empty() const { return source_.empty(); }

  // Globally nearest point; ties go to the lowest point index.
  NearestResult Nearest(const Eigen::Vector3d& query) const;
  // Same, restricted to points strictly closer than max_distance and, if
  // given, inside `region`. Equivalent to querying an index built from just
  // the points in the region.
  std::optional<NearestResult> NearestWithin(
      const Eigen::Vector3d& query, double max_distance,
      const Ball* region = nullptr) const;

  // Indices of all points with distance <= radius, ascending.
  std::vector<std::size_t> RadiusIndices(const Eigen::Vector3d& center,
                                         double radius) const;

 private:
  struct Node {
    std::uint32_t begin;
    std::uint32_t end;
    std::int32_t left = -1;
    std::int32_t right = -1;
    int axis = 0;
    double split = 0.0;
  };

  MapIndex(PointCloud cloud, double voxel_size, bool);
  void Build();
  std::int32_t BuildRange(std::uint32_t begin, std::uint32_t end);
  void NearestIn(std::int32_t node, const Eigen::Vector3d& q, double* best_d2,
                 std::size_t* best_index, const Ball* region = nullptr) const;
  void RadiusIn(std::int32_t node, const Eigen::Vector3d& c, double r2,
                std::vector<std::size_t>* out) const;

  PointCloud source_;
  double voxel_size_;
  std::vector<std::uint32_t> order_;
  std::vector<Eigen::Vector3d> ordered_;  // source_ permuted by order_
  std::vector<Node> nodes_;
};

MapIndex BuildIndex(const PointCloud& cloud, double voxel_size);

// Indexed points within `radius` of `center`, in index order.
PointCloud RadiusQuery(const MapIndex& map, const Eigen::Vector3d& center,
                       double radius);

NearestResult Nearest(const MapIndex& map, const Eigen::Vector3d& query);

// ASCII "x y z" per line, '#' comments ignored, 9 significant digits.
PointCloud ReadXyz(const std::string& path);
void WriteXyz(const std::string& path, const PointCloud& cloud);

}  // namespace ptloc

#endif  // PTLOC_CLOUD_H_
