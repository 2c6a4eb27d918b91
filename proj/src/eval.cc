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

#include "ptloc/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "ptloc/error.h"

namespace ptloc {

PoseTrajectory ReadTrajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  PoseTrajectory out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream s(line);
    double t, v[7];
    s >> t;
    for (double& x : v) s >> x;
    if (!s) {
      throw Error(ErrorCode::kParse,
                  path + ":" + std::to_string(line_no) +
                      ": expected timestamp tx ty tz qx qy qz qw");
    }
    out.push_back(StampedPose{t, Pose3d(Eigen::Quaterniond(v[6], v[3], v[4], v[5]),
                                        Eigen::Vector3d(v[0], v[1], v[2]))});
  }
  return out;
}

void WriteTrajectory(const std::string& path, const PoseTrajectory& trajectory) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (f == nullptr) throw Error(ErrorCode::kIo, "cannot write " + path);
  for (const auto& s : trajectory) {
    const auto& p = s.pose.translation();
    const auto& q = s.pose.rotation();
    std::fprintf(f, "%.9f %.9f %.9f %.9f %.9f %.9f %.9f %.9f\n", s.time, p.x(),
                 p.y(), p.z(), q.x(), q.y(), q.z(), q.w());
  }
  if (std::fclose(f) != 0) throw Error(ErrorCode::kIo, "write failed " + path);
}

Pose3d InterpolatePose(const PoseTrajectory& trajectory, double time) {
  if (trajectory.empty()) throw Error(ErrorCode::kEmptyInput, "empty trajectory");
  if (time <= trajectory.front().time) return trajectory.front().pose;
  if (time >= trajectory.back().time) return trajectory.back().pose;
  const auto next = std::upper_bound(
      trajectory.begin(), trajectory.end(), time,
      [](double t, const StampedPose& s) { return t < s.time; });
  const auto& a = *std::prev(next);
  const auto& b = *next;
  const double alpha = (time - a.time) / (b.time - a.time);
  return Pose3d(a.pose.rotation().slerp(alpha, b.pose.rotation()),
                a.pose.translation() +
                    alpha * (b.pose.translation() - a.pose.translation()));
}

std::vector<ErrorSample> ErrorSeries(const PoseTrajectory& estimate,
                                     const PoseTrajectory& ground_truth) {
  if (ground_truth.empty() || estimate.empty()) {
    throw Error(ErrorCode::kAlignment, "empty trajectory");
  }
  const double t0 = ground_truth.front().time;
  const double t1 = ground_truth.back().time;
  std::vector<ErrorSample> out;
  for (const auto& s : estimate) {
    if (s.time < t0 || s.time > t1) continue;
    const Eigen::Vector3d diff =
        s.pose.translation() - InterpolatePose(ground_truth, s.time).translation();
    out.push_back(ErrorSample{s.time, std::hypot(diff.x(), diff.y())});
  }
  if (out.empty()) {
    throw Error(ErrorCode::kAlignment,
                "estimate and ground truth do not overlap in time");
  }
  return out;
}

double Percentile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::kEmptyInput, "no values");
  std::sort(values.begin(), values.end());
  const double rank = std::clamp(q, 0.0, 100.0) / 100.0 *
                      static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (rank - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

ErrorStats Stats(const std::vector<double>& values) {
  if (values.empty()) throw Error(ErrorCode::kEmptyInput, "empty error series");
  ErrorStats s;
  const double n = static_cast<double>(values.size());
  double sum = 0.0, sum_sq = 0.0;
  for (double v : values) {
    sum += v;
    sum_sq += v * v;
  }
  s.mean = sum / n;
  s.rmse = std::sqrt(sum_sq / n);
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(var / n);
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  s.median = Percentile(values, 50.0);
  s.p50 = s.median;
  s.p66_7 = Percentile(values, 66.7);
  s.p95 = Percentile(values, 95.0);
  s.sample_count = values.size();
  return s;
}

ErrorStats Stats(const std::vector<ErrorSample>& series) {
  std::vector<double> values;
  values.reserve(series.size());
  for (const auto& s : series) values.push_back(s.error);
  return Stats(values);
}

std::string FormatStats(const ErrorStats& s) {
  char buf[1024];
  std::snprintf(buf, sizeof(buf),
                "%-18s %s\n"
                "%-18s %.6f\n%-18s %.6f\n%-18s %.6f\n%-18s %.6f\n"
                "%-18s %.6f\n%-18s %.6f\n%-18s %.6f\n%-18s %.6f\n"
                "%-18s %zu\n",
                "Error measure (m)", "Value", "Mean", s.mean, "Median",
                s.median, "RMSE", s.rmse, "Std", s.std, "Min", s.min, "Max",
                s.max, "P66.7", s.p66_7, "P95", s.p95, "Samples",
                s.sample_count);
  return buf;
}

std::string FormatStatsCsv(const ErrorStats& s) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "measure,value\nmean,%.9f\nmedian,%.9f\nrmse,%.9f\nstd,%.9f\n"
                "min,%.9f\nmax,%.9f\np50,%.9f\np66.7,%.9f\np95,%.9f\n"
                "samples,%zu\n",
                s.mean, s.median, s.rmse, s.std, s.min, s.max, s.p50, s.p66_7,
                s.p95, s.sample_count);
  return buf;
}

LengthTable ErrorByLength(const PoseTrajectory& estimate,
                          const PoseTrajectory& ground_truth,
                          const std::vector<double>& segment_lengths) {
  LengthTable table;
  if (segment_lengths.empty()) return table;

  // Ground truth resampled at the estimate stamps it covers.
  std::vector<Pose3d> est, gt;
  for (const auto& s : estimate) {
    if (ground_truth.empty() || s.time < ground_truth.front().time ||
        s.time > ground_truth.back().time) {
      continue;
    }
    est.push_back(s.pose);
    gt.push_back(InterpolatePose(ground_truth, s.time));
  }
  std::vector<double> distance(gt.size(), 0.0);
  for (std::size_t i = 1; i < gt.size(); ++i) {
    distance[i] = distance[i - 1] +
                  (gt[i].translation() - gt[i - 1].translation()).norm();
  }
  constexpr double kSlack = 1e-9;

  for (double length : segment_lengths) {
    if (gt.empty() || distance.back() + kSlack < length) {
      ++table.skipped_lengths;
      continue;
    }
    double t_sum = 0.0, r_sum = 0.0;
    std::size_t count = 0;
    std::size_t j = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      j = std::max(j, i);
      while (j < gt.size() && distance[j] - distance[i] + kSlack < length) ++j;
      if (j >= gt.size()) break;
      const Pose3d gt_rel = Between(gt[i], gt[j]);
      const Pose3d est_rel = Between(est[i], est[j]);
      const Pose3d err = Between(est_rel, gt_rel);
      t_sum += err.translation().norm() / length;
      r_sum += RotationAngle(err.rotation()) / length;
      ++count;
    }
    if (count == 0) {
      ++table.skipped_lengths;
      continue;
    }
    table.rows.push_back(SegmentError{
        length, 100.0 * t_sum / static_cast<double>(count),
        r_sum / static_cast<double>(count) * 180.0 / std::numbers::pi, count});
  }
  return table;
}

std::string FormatLengthTable(const LengthTable& table) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-12s %-16s %-16s %s\n", "Length (m)",
                "Translation (%)", "Rotation (deg/m)", "Segments");
  out << buf;
  for (const auto& row : table.rows) {
    std::snprintf(buf, sizeof(buf), "%-12.1f %-16.6f %-16.6f %zu\n", row.length,
                  row.translation_percent, row.rotation_deg_per_m, row.segments);
    out << buf;
  }
  if (table.skipped_lengths > 0) {
    out << "# skipped " << table.skipped_lengths
        << " segment length(s) longer than the trajectory\n";
  }
  return out.str();
}

std::vector<std::size_t> TimingRecord::Histogram() const {
  std::vector<std::size_t> buckets(kBuckets, 0);
  for (double s : samples_) {
    const auto b = static_cast<std::size_t>(std::max(0.0, s) / kBucketWidth);
    ++buckets[std::min(b, kBuckets - 1)];
  }
  return buckets;
}

double TimingRecord::Percentile(double q) const {
  return ptloc::Percentile(samples_, q);
}

std::string TimingRecord::Format() const {
  std::ostringstream out;
  const auto buckets = Histogram();
  char buf[128];
  out << "# on_scan time histogram (" << samples_.size() << " scans)\n";
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    if (i + 1 < buckets.size()) {
      std::snprintf(buf, sizeof(buf), "%3zu-%3zu ms %8zu\n", i * 10,
                    (i + 1) * 10, buckets[i]);
    } else {
      std::snprintf(buf, sizeof(buf), "%3zu+    ms %8zu\n", i * 10, buckets[i]);
    }
    out << buf;
  }
  if (!samples_.empty()) {
    std::snprintf(buf, sizeof(buf), "p50 %.2f ms, p95 %.2f ms, max %.2f ms\n",
                  1e3 * Percentile(50), 1e3 * Percentile(95),
                  1e3 * *std::max_element(samples_.begin(), samples_.end()));
    out << buf;
  }
  return out.str();
}

}  // namespace ptloc
