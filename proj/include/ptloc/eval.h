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

#ifndef PTLOC_EVAL_H_
#define PTLOC_EVAL_H_

#include <cstddef>
#include <string>
#include <vector>

#include "ptloc/geom.h"

namespace ptloc {

struct StampedPose {
  double time;
  Pose3d pose;
};

using PoseTrajectory = std::vector<StampedPose>;

// "timestamp tx ty tz qx qy qz qw" per line; '#' comments allowed.
PoseTrajectory ReadTrajectory(const std::string& path);
void WriteTrajectory(const std::string& path, const PoseTrajectory& trajectory);

// Pose at `time`: linear in translation, slerp in rotation. `trajectory` must
// be sorted by time and `time` inside its range.
Pose3d InterpolatePose(const PoseTrajectory& trajectory, double time);

struct ErrorSample {
  double time;
  double error;  // m
};

// Planar error sqrt(ex^2 + ey^2) at every estimate stamp inside the
// ground-truth time range. Throws kAlignment if no stamp overlaps.
std::vector<ErrorSample> ErrorSeries(const PoseTrajectory& estimate,
                                     const PoseTrajectory& ground_truth);

struct ErrorStats {
  double mean = 0.0;
  double median = 0.0;
  double rmse = 0.0;
  double std = 0.0;  // population convention
  double min = 0.0;
  double max = 0.0;
  double p50 = 0.0;
  double p66_7 = 0.0;
  double p95 = 0.0;
  std::size_t sample_count = 0;
};

// Linear-interpolated percentile, q in [0, 100].
double Percentile(std::vector<double> values, double q);

ErrorStats Stats(const std::vector<double>& values);
ErrorStats Stats(const std::vector<ErrorSample>& series);

std::string FormatStats(const ErrorStats& stats);
std::string FormatStatsCsv(const ErrorStats& stats);

struct SegmentError {
  double length;               // m
  double translation_percent;  // mean relative translation error, %
  double rotation_deg_per_m;   // mean rotation error per meter
  std::size_t segments;        // start indices that contributed
};

struct LengthTable {
  std::vector<SegmentError> rows;
  std::size_t skipped_lengths = 0;  // lengths longer than the trajectory
};

// Relative errors over every sub-path whose ground-truth length reaches each
// requested segment length, evaluated at estimate stamps.
LengthTable ErrorByLength(const PoseTrajectory& estimate,
                          const PoseTrajectory& ground_truth,
                          const std::vector<double>& segment_lengths);

std::string FormatLengthTable(const LengthTable& table);

// Per-scan processing time with a fixed 10 ms histogram up to 200 ms; the
// last bucket collects everything slower.
class TimingRecord {
 public:
  static constexpr double kBucketWidth = 0.01;
  static constexpr std::size_t kBuckets = 21;  // 20 x 10 ms + overflow

  void Add(double seconds) { samples_.push_back(seconds); }
  const std::vector<double>& samples() const { return samples_; }
  std::vector<std::size_t> Histogram() const;
  double Percentile(double q) const;
  std::string Format() const;

 private:
  std::vector<double> samples_;
};

}  // namespace ptloc

#endif  // PTLOC_EVAL_H_
