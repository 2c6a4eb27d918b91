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

#ifndef PTLOC_ODOM_H_
#define PTLOC_ODOM_H_

#include <string>
#include <utility>
#include <vector>

#include "ptloc/geom.h"

namespace ptloc {

struct EncoderConfig {
  double wheel_base = 1.2;            // m, distance between the wheels
  double pulses_per_rev = 36.0;       // 36-tooth gear
  double wheel_circumference = 1.5;   // m

  // Distance represented by a single pulse.
  double quantum() const { return wheel_circumference / pulses_per_rev; }
  void Validate() const;
};

struct EncoderTick {
  double timestamp = 0.0;
  long pulses_left = 0;
  long pulses_right = 0;
};

struct WheelDistances {
  double left;
  double right;
};

struct StampedPose2 {
  double timestamp;
  Pose2d pose;
};

WheelDistances TickToDistances(const EncoderConfig& config,
                               const EncoderTick& tick);

// One Euler step of differential-drive dead reckoning. The new position is
// advanced along the *previous* heading.
//
// NOTE: the yaw increment is (d_right - d_left) / wheel_base. The commonly
// printed form of this update repeats the center-distance expression for the
// yaw term, which cannot be right since the yaw would then grow with forward
// travel and the wheel base would go unused.
Pose2d Integrate(const Pose2d& previous, double d_left, double d_right,
                 double wheel_base);

// Left fold of Integrate over the stream; output[i] is the pose after tick i.
std::vector<StampedPose2> IntegrateStream(const EncoderConfig& config,
                                          const Pose2d& start,
                                          const std::vector<EncoderTick>& ticks);

// ASCII "timestamp pulses_left pulses_right" per line.
std::vector<EncoderTick> ReadEncoderStream(const std::string& path);
void WriteEncoderStream(const std::string& path,
                        const std::vector<EncoderTick>& ticks);

}  // namespace ptloc

#endif  // PTLOC_ODOM_H_
