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

#include "ptloc/cloud.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "ptloc/error.h"

namespace ptloc {
namespace {

constexpr std::uint32_t kLeafSize = 8;

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const {
    std::uint64_t h = static_cast<std::uint64_t>(k.x) * 73856093ULL;
    h ^= static_cast<std::uint64_t>(k.y) * 19349663ULL;
    h ^= static_cast<std::uint64_t>(k.z) * 83492791ULL;
    return static_cast<std::size_t>(h);
  }
};

void CheckFinite(const Eigen::Vector3d& p) {
  if (!p.allFinite()) {
    throw Error(ErrorCode::kInvalidParameter, "non-finite point coordinate");
  }
}

}  // namespace

PointCloud::PointCloud(std::vector<Eigen::Vector3d> points,
                       std::optional<double> timestamp)
    : points_(std::move(points)), timestamp_(timestamp) {
  for (const auto& p : points_) CheckFinite(p);
}

void PointCloud::push_back(const Eigen::Vector3d& point) {
  CheckFinite(point);
  points_.push_back(point);
}

PointCloud TransformCloud(const Pose3d& pose, const PointCloud& cloud) {
  const Eigen::Matrix3d r = pose.rotation().toRotationMatrix();
  std::vector<Eigen::Vector3d> out;
  out.reserve(cloud.size());
  for (const auto& p : cloud) out.push_back(r * p + pose.translation());
  return PointCloud(std::move(out), cloud.timestamp());
}

VoxelKey VoxelOf(const Eigen::Vector3d& p, double voxel_size) {
  return VoxelKey{static_cast<std::int64_t>(std::floor(p.x() / voxel_size)),
                  static_cast<std::int64_t>(std::floor(p.y() / voxel_size)),
                  static_cast<std::int64_t>(std::floor(p.z() / voxel_size))};
}

PointCloud VoxelDownsample(const PointCloud& cloud, double voxel_size) {
  if (!(voxel_size > 0.0) || !std::isfinite(voxel_size)) {
    throw Error(ErrorCode::kInvalidParameter, "voxel_size must be positive");
  }
  struct Accumulator {
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    std::size_t count = 0;
  };
  std::unordered_map<VoxelKey, std::size_t, VoxelKeyHash> slot;
  slot.reserve(cloud.size());
  std::vector<Accumulator> voxels;
  for (const auto& p : cloud) {
    auto [it, inserted] = slot.try_emplace(VoxelOf(p, voxel_size), voxels.size());
    if (inserted) voxels.emplace_back();
    Accumulator& acc = voxels[it->second];
    acc.sum += p;
    ++acc.count;
  }
  std::vector<Eigen::Vector3d> out;
  out.reserve(voxels.size());
  for (const auto& acc : voxels) {
    out.push_back(acc.sum / static_cast<double>(acc.count));
  }
  return PointCloud(std::move(out), cloud.timestamp());
}

MapIndex::MapIndex(const PointCloud& cloud, double voxel_size)
    : MapIndex(VoxelDownsample(cloud, voxel_size), voxel_size, true) {}

MapIndex::MapIndex(PointCloud cloud, double voxel_size, bool)
    : source_(std::move(cloud)), voxel_size_(voxel_size) {
  if (!(voxel_size > 0.0)) {
    throw Error(ErrorCode::kInvalidParameter, "voxel_size must be positive");
  }
  if (source_.size() >= std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::kInvalidParameter, "cloud too large to index");
  }
  Build();
}

MapIndex MapIndex::FromSparse(PointCloud cloud, double voxel_size) {
  return MapIndex(std::move(cloud), voxel_size, true);
}

void MapIndex::Build() {
  order_.resize(source_.size());
  for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
  nodes_.clear();
  if (!order_.empty()) {
    nodes_.reserve(2 * order_.size() / kLeafSize + 1);
    BuildRange(0, static_cast<std::uint32_t>(order_.size()));
  }
  ordered_.resize(order_.size());
  for (std::size_t i = 0; i < order_.size(); ++i) {
    ordered_[i] = source_[order_[i]];
  }
}

std::int32_t MapIndex::BuildRange(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= kLeafSize) return id;

  Eigen::Vector3d lo = Eigen::Vector3d::Constant(
      std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(source_[order_[i]]);
    hi = hi.cwiseMax(source_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] - lo[axis] <= 0.0) return id;  // all points coincide

  const std::uint32_t mid = begin + (end - begin) / 2;
  const auto& pts = source_.points();
  std::nth_element(order_.begin() + begin, order_.begin() + mid,
                   order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     if (pts[a][axis] != pts[b][axis]) {
                       return pts[a][axis] < pts[b][axis];
                     }
                     return a < b;
                   });
  nodes_[id].axis = axis;
  nodes_[id].split = pts[order_[mid]][axis];
  const std::int32_t left = BuildRange(begin, mid);
  const std::int32_t right = BuildRange(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

// Left subtree holds coordinates <= split, right subtree >= split.
void MapIndex::NearestIn(std::int32_t node_id, const Eigen::Vector3d& q,
                         double* best_d2, std::size_t* best_index,
                         const Ball* region) const {
  const Node& node = nodes_[node_id];
  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      if (region != nullptr && (ordered_[i] - region->center).squaredNorm() >
                                   region->radius * region->radius) {
        continue;
      }
      const double d2 = (ordered_[i] - q).squaredNorm();
      if (d2 < *best_d2 || (d2 == *best_d2 && order_[i] < *best_index)) {
        *best_d2 = d2;
        *best_index = order_[i];
      }
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const std::int32_t near = diff <= 0.0 ? node.left : node.right;
  const std::int32_t far = diff <= 0.0 ? node.right : node.left;
  NearestIn(near, q, best_d2, best_index, region);
  // Equal distance must still be visited so ties resolve by index.
  if (diff * diff <= *best_d2) NearestIn(far, q, best_d2, best_index, region);
}

NearestResult MapIndex::Nearest(const Eigen::Vector3d& query) const {
  if (empty()) throw Error(ErrorCode::kEmptyInput, "nearest on empty index");
  double best_d2 = std::numeric_limits<double>::infinity();
  std::size_t best_index = std::numeric_limits<std::size_t>::max();
  NearestIn(0, query, &best_d2, &best_index);
  return NearestResult{source_[best_index], std::sqrt(best_d2), best_index};
}

std::optional<NearestResult> MapIndex::NearestWithin(
    const Eigen::Vector3d& query, double max_distance,
    const Ball* region) const {
  const double limit = max_distance * max_distance;
  double best_d2 = limit;
  std::size_t best_index = std::numeric_limits<std::size_t>::max();
  if (!empty()) NearestIn(0, query, &best_d2, &best_index, region);
  if (!(best_d2 < limit)) return std::nullopt;
  return NearestResult{source_[best_index], std::sqrt(best_d2), best_index};
}

void MapIndex::RadiusIn(std::int32_t node_id, const Eigen::Vector3d& c,
                        double r2, std::vector<std::size_t>* out) const {
  const Node& node = nodes_[node_id];
  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      if ((ordered_[i] - c).squaredNorm() <= r2) {
        out->push_back(order_[i]);
      }
    }
    return;
  }
  const double diff = c[node.axis] - node.split;
  if (diff <= 0.0 || diff * diff <= r2) RadiusIn(node.left, c, r2, out);
  if (diff >= 0.0 || diff * diff <= r2) RadiusIn(node.right, c, r2, out);
}

std::vector<std::size_t> MapIndex::RadiusIndices(const Eigen::Vector3d& center,
                                                 double radius) const {
  if (!(radius > 0.0)) {
    throw Error(ErrorCode::kInvalidParameter, "radius must be positive");
  }
  std::vector<std::size_t> out;
  if (!empty()) RadiusIn(0, center, radius * radius, &out);
  std::sort(out.begin(), out.end());
  return out;
}

MapIndex BuildIndex(const PointCloud& cloud, double voxel_size) {
  if (cloud.empty()) throw Error(ErrorCode::kEmptyInput, "empty cloud");
  return MapIndex(cloud, voxel_size);
}

PointCloud RadiusQuery(const MapIndex& map, const Eigen::Vector3d& center,
                       double radius) {
  PointCloud out;
  const auto ids = map.RadiusIndices(center, radius);
  out.reserve(ids.size());
  for (std::size_t i : ids) out.push_back(map.source()[i]);
  return out;
}

NearestResult Nearest(const MapIndex& map, const Eigen::Vector3d& query) {
  return map.Nearest(query);
}

PointCloud ReadXyz(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  PointCloud cloud;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    Eigen::Vector3d p;
    if (!(fields >> p.x() >> p.y() >> p.z())) {
      throw Error(ErrorCode::kParse,
                  path + ":" + std::to_string(line_no) + ": expected x y z");
    }
    cloud.push_back(p);
  }
  return cloud;
}

void WriteXyz(const std::string& path, const PointCloud& cloud) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (f == nullptr) throw Error(ErrorCode::kIo, "cannot write " + path);
  for (const auto& p : cloud) {
    std::fprintf(f, "%.9g %.9g %.9g\n", p.x(), p.y(), p.z());
  }
  if (std::fclose(f) != 0) throw Error(ErrorCode::kIo, "write failed " + path);
}

}  // namespace ptloc
