#!/usr/bin/env python3
# Copyright 2026 The ptloc Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes data/estate.json: a box-world estate driven around a loop."""

import argparse
import json
import math

# Road centreline: rounded rectangle, straights at x = +-40 and y = +-30.
HALF_X, HALF_Y, CORNER = 30.0, 20.0, 10.0
V_STRAIGHT, V_CORNER, ACCEL = 7.0, 4.5, 1.5
DS = 0.05


def centreline():
  """Returns (x, y, yaw, is_corner) samples, counter-clockwise from (0, -30)."""
  pts = []

  def straight(x0, y0, yaw, length):
    n = int(round(length / DS))
    for i in range(n):
      s = i * DS
      pts.append((x0 + s * math.cos(yaw), y0 + s * math.sin(yaw), yaw, False))

  def arc(cx, cy, a0):
    n = int(round(CORNER * math.pi / 2 / DS))
    for i in range(n):
      a = a0 + i * DS / CORNER
      pts.append((cx + CORNER * math.cos(a), cy + CORNER * math.sin(a),
                  a + math.pi / 2, True))

  straight(0.0, -HALF_Y - CORNER, 0.0, HALF_X)
  arc(HALF_X, -HALF_Y, -math.pi / 2)
  straight(HALF_X + CORNER, -HALF_Y, math.pi / 2, 2 * HALF_Y)
  arc(HALF_X, HALF_Y, 0.0)
  straight(HALF_X, HALF_Y + CORNER, math.pi, 2 * HALF_X)
  arc(-HALF_X, HALF_Y, math.pi / 2)
  straight(-HALF_X - CORNER, HALF_Y, -math.pi / 2, 2 * HALF_Y)
  arc(-HALF_X, -HALF_Y, math.pi)
  straight(-HALF_X, -HALF_Y - CORNER, 0.0, HALF_X)
  return pts


def speed_profile(pts, laps):
  n = len(pts) * laps
  vmax = [V_CORNER if pts[i % len(pts)][3] else V_STRAIGHT for i in range(n)]
  v = vmax[:]
  v[0] = 0.0
  for i in range(1, n):
    v[i] = min(v[i], math.sqrt(v[i - 1] ** 2 + 2 * ACCEL * DS))
  for i in range(n - 2, -1, -1):
    v[i] = min(v[i], math.sqrt(v[i + 1] ** 2 + 2 * ACCEL * DS))
  return v


def waypoints(duration, step):
  pts = centreline()
  v = speed_profile(pts, laps=3)
  out = []
  t, s_index, frac = 0.0, 0, 0.0
  next_t = 0.0
  dt = 0.001
  while next_t <= duration + 1e-9:
    if t >= next_t - 1e-12:
      a = pts[s_index % len(pts)]
      b = pts[(s_index + 1) % len(pts)]
      x = a[0] + frac * (b[0] - a[0])
      y = a[1] + frac * (b[1] - a[1])
      dyaw = math.remainder(b[2] - a[2], 2 * math.pi)
      yaw = math.remainder(a[2] + frac * dyaw, 2 * math.pi)
      out.append([round(next_t, 6), round(x, 6), round(y, 6), round(yaw, 9)])
      next_t = round(next_t + step, 9)
    speed = max(v[s_index], 0.3) if s_index == 0 else v[s_index]
    frac += speed * dt / DS
    while frac >= 1.0:
      frac -= 1.0
      s_index += 1
    t += dt
  return out


def box(x0, y0, x1, y1, h):
  return {"min": [x0, y0, 0.0], "max": [x1, y1, h]}


def world():
  boxes = [
      # Inner block, kept clear of the truck lane at y in [-24, -20].
      box(-30, -16, -18, -4, 9), box(-12, -18, -2, -9, 6),
      box(4, -17, 16, -7, 12), box(22, -16, 31, -2, 7),
      box(-29, 4, -20, 18, 8), box(-13, 2, 3, 10, 5),
      box(8, 6, 14, 19, 10), box(20, 8, 32, 17, 6),
      # Outer buildings.
      box(-48, -48, -30, -38, 10), box(-20, -49, -2, -39, 7),
      box(10, -47, 26, -40, 14), box(34, -49, 49, -37, 8),
      box(-49, 38, -33, 49, 9), box(-22, 37, -8, 47, 12),
      box(2, 39, 20, 49, 6), box(30, 37, 46, 48, 11),
      box(-50, -28, -47, -6, 8), box(-50, 4, -46, 26, 13),
      box(47, -26, 50, -10, 9), box(46, 0, 50, 30, 7),
  ]
  # Shipping containers.
  for x, y, along_x in [(-44, -35, True), (-44, 33, True), (44, -33, False),
                        (-2, 33, True), (24, -35, True), (45, 33, False)]:
    if along_x:
      boxes.append(box(x, y, x + 6.0, y + 2.4, 2.6))
    else:
      boxes.append(box(x, y, x + 2.4, y + 6.0, 2.6))
  # Light poles along the outside of the loop.
  for i in range(8):
    x = -35.0 + 10.0 * i
    boxes.append(box(x, -35.8, x + 0.3, -35.5, 5.0))
    boxes.append(box(x + 5.0, 35.5, x + 5.3, 35.8, 5.0))
  for i in range(5):
    y = -20.0 + 10.0 * i
    boxes.append(box(45.5, y, 45.8, y + 0.3, 5.0))
    boxes.append(box(-45.8, y + 5.0, -45.5, y + 5.3, 5.0))
  trucks = [{"min": [x0, -23.5, 0.0], "max": [x0 + 9.0, -21.0, 3.8],
             "velocity": [0.5, 0.0, 0.0]} for x0 in (-30.0, -18.0, -5.0)]
  return {"ground_plane": True, "boxes": boxes, "dynamic_boxes": trucks}


def main():
  parser = argparse.ArgumentParser(description=__doc__)
  parser.add_argument("--output", default="data/estate.json")
  parser.add_argument("--duration", type=float, default=60.0)
  parser.add_argument("--seed", type=int, default=20)
  args = parser.parse_args()
  scenario = {
      "seed": args.seed,
      "duration": args.duration,
      "world": world(),
      "trajectory": waypoints(args.duration + 0.5, 0.1),
      "sensors": {
          "lidar": {"channels": 16, "vertical_fov_deg": 30.0,
                    "horizontal_fov_deg": 360.0, "rays_per_revolution": 900,
                    "rate": 10.0, "range_noise_sigma": 0.02,
                    "min_range": 0.5, "max_range": 60.0, "mount_height": 1.8},
          "encoder": {"wheel_base": 1.2, "pulses_per_rev": 36,
                      "wheel_circumference": 1.5, "rate": 50.0},
          "gps": {"noise_sigma": 0.02, "rate": 1.0,
                  "dropouts": [[20.0, 25.0]]},
      },
  }
  with open(args.output, "w") as f:
    json.dump(scenario, f, indent=1)
    f.write("\n")


if __name__ == "__main__":
  main()
