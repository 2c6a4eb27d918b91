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

#include "ptloc/odom.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ptloc/error.h"

namespace ptloc {

void EncoderConfig::Validate() const {
  if (!(wheel_base > 0.0) || !(pulses_per_rev > 0.0) ||
      !(wheel_circumference > 0.0)) {
    throw Error(ErrorCode::kInvalidParameter,
                "encoder config fields must be strictly positive");
  }
}

WheelDistances TickToDistances(const EncoderConfig& config,
                               const EncoderTick& tick) {
  const double per_pulse = config.wheel_circumference / config.pulses_per_rev;
  return WheelDistances{static_cast<double>(tick.pulses_left) * per_pulse,
                        static_cast<double>(tick.pulses_right) * per_pulse};
}

Pose2d Integrate(const Pose2d& previous, double d_left, double d_right,
                 double wheel_base) {
  if (!(wheel_base > 0.0)) {
    throw Error(ErrorCode::kInvalidParameter, "wheel base must be positive");
  }
  const double d_center = 0.5 * (d_left + d_right);
  const double dtheta = (d_right - d_left) / wheel_base;
  return Pose2d(previous.x() + d_center * std::cos(previous.theta()),
                previous.y() + d_center * std::sin(previous.theta()),
                previous.theta() + dtheta);
}

std::vector<StampedPose2> IntegrateStream(
    const EncoderConfig& config, const Pose2d& start,
    const std::vector<EncoderTick>& ticks) {
  config.Validate();
  std::vector<StampedPose2> out;
  out.reserve(ticks.size());
  Pose2d pose = start;
  for (std::size_t i = 0; i < ticks.size(); ++i) {
    if (i > 0 && !(ticks[i].timestamp > ticks[i - 1].timestamp)) {
      throw Error(ErrorCode::kOrdering,
                  "encoder timestamps not strictly increasing at index " +
                      std::to_string(i));
    }
    const WheelDistances d = TickToDistances(config, ticks[i]);
    pose = Integrate(pose, d.left, d.right, config.wheel_base);
    out.push_back(StampedPose2{ticks[i].timestamp, pose});
  }
  return out;
}

std::vector<EncoderTick> ReadEncoderStream(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::vector<EncoderTick> ticks;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    EncoderTick t;
    if (!(fields >> t.timestamp >> t.pulses_left >> t.pulses_right)) {
      throw Error(ErrorCode::kParse, path + ":" + std::to_string(line_no) +
                                         ": expected timestamp left right");
    }
    ticks.push_back(t);
  }
  return ticks;
}

void WriteEncoderStream(const std::string& path,
                        const std::vector<EncoderTick>& ticks) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (f == nullptr) throw Error(ErrorCode::kIo, "cannot write " + path);
  for (const auto& t : ticks) {
    std::fprintf(f, "%.6f %ld %ld\n", t.timestamp, t.pulses_left,
                 t.pulses_right);
  }
  std::fclose(f);
}

}  // namespace ptloc
