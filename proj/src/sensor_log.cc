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

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "ptloc/error.h"
#include "ptloc/sim.h"

namespace ptloc {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kDeg = std::numbers::pi / 180.0;

json VecToJson(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

Eigen::Vector3d VecFromJson(const json& j) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorCode::kParse, "expected a 3-element array");
  }
  return Eigen::Vector3d(j[0].get<double>(), j[1].get<double>(),
                         j[2].get<double>());
}

json SensorsToJson(const SensorSuite& s) {
  json dropouts = json::array();
  for (const auto& [a, b] : s.gps.dropout_intervals) dropouts.push_back({a, b});
  return {
      {"lidar",
       {{"channels", s.lidar.channels},
        {"vertical_fov_deg", s.lidar.vertical_fov / kDeg},
        {"horizontal_fov_deg", s.lidar.horizontal_fov / kDeg},
        {"rays_per_revolution", s.lidar.rays_per_revolution},
        {"rate", s.lidar.rate},
        {"range_noise_sigma", s.lidar.range_noise_sigma},
        {"min_range", s.lidar.min_range},
        {"max_range", s.lidar.max_range},
        {"mount_height", s.lidar.mount_height}}},
      {"encoder",
       {{"wheel_base", s.encoder.wheel_base},
        {"pulses_per_rev", s.encoder.pulses_per_rev},
        {"wheel_circumference", s.encoder.wheel_circumference},
        {"rate", s.encoder_rate}}},
      {"gps",
       {{"noise_sigma", s.gps.noise_sigma},
        {"rate", s.gps.rate},
        {"dropouts", dropouts}}},
  };
}

SensorSuite SensorsFromJson(const json& j) {
  SensorSuite s;
  if (j.contains("lidar")) {
    const json& l = j["lidar"];
    s.lidar.channels = l.value("channels", s.lidar.channels);
    s.lidar.vertical_fov =
        l.value("vertical_fov_deg", s.lidar.vertical_fov / kDeg) * kDeg;
    s.lidar.horizontal_fov =
        l.value("horizontal_fov_deg", s.lidar.horizontal_fov / kDeg) * kDeg;
    s.lidar.rays_per_revolution =
        l.value("rays_per_revolution", s.lidar.rays_per_revolution);
    s.lidar.rate = l.value("rate", s.lidar.rate);
    s.lidar.range_noise_sigma =
        l.value("range_noise_sigma", s.lidar.range_noise_sigma);
    s.lidar.min_range = l.value("min_range", s.lidar.min_range);
    s.lidar.max_range = l.value("max_range", s.lidar.max_range);
    s.lidar.mount_height = l.value("mount_height", s.lidar.mount_height);
  }
  if (j.contains("encoder")) {
    const json& e = j["encoder"];
    s.encoder.wheel_base = e.value("wheel_base", s.encoder.wheel_base);
    s.encoder.pulses_per_rev = e.value("pulses_per_rev", s.encoder.pulses_per_rev);
    s.encoder.wheel_circumference =
        e.value("wheel_circumference", s.encoder.wheel_circumference);
    s.encoder_rate = e.value("rate", s.encoder_rate);
  }
  if (j.contains("gps")) {
    const json& g = j["gps"];
    s.gps.noise_sigma = g.value("noise_sigma", s.gps.noise_sigma);
    s.gps.rate = g.value("rate", s.gps.rate);
    if (g.contains("dropouts")) {
      for (const auto& d : g["dropouts"]) {
        s.gps.dropout_intervals.emplace_back(d.at(0).get<double>(),
                                             d.at(1).get<double>());
      }
    }
  }
  return s;
}

json ReadJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, path + ": " + e.what());
  }
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

std::string PoseFields(const Pose3d& p) {
  const auto& q = p.rotation();
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%.9f %.9f %.9f %.9f %.9f %.9f %.9f",
                p.translation().x(), p.translation().y(), p.translation().z(),
                q.x(), q.y(), q.z(), q.w());
  return buf;
}

bool IsContent(const std::string& line) {
  const auto first = line.find_first_not_of(" \t\r");
  return first != std::string::npos && line[first] != '#';
}

}  // namespace

Scenario LoadScenario(const std::string& path) {
  const json j = ReadJson(path);
  Scenario s;
  try {
    s.seed = j.value("seed", s.seed);
    s.duration = j.value("duration", s.duration);
    const json& w = j.at("world");
    s.world.ground_plane = w.value("ground_plane", true);
    for (const auto& b : w.value("boxes", json::array())) {
      s.world.static_boxes.push_back(
          Box{VecFromJson(b.at("min")), VecFromJson(b.at("max"))});
    }
    for (const auto& b : w.value("dynamic_boxes", json::array())) {
      s.world.dynamic_boxes.push_back(MovingBox{
          Box{VecFromJson(b.at("min")), VecFromJson(b.at("max"))},
          VecFromJson(b.at("velocity"))});
    }
    for (const auto& p : j.at("trajectory")) {
      s.waypoints.push_back(Waypoint{p.at(0).get<double>(), p.at(1).get<double>(),
                                     p.at(2).get<double>(),
                                     p.at(3).get<double>()});
    }
    s.sensors = SensorsFromJson(j.value("sensors", json::object()));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, path + ": " + e.what());
  }
  return s;
}

void SaveScenario(const std::string& path, const Scenario& scenario) {
  json boxes = json::array();
  for (const auto& b : scenario.world.static_boxes) {
    boxes.push_back({{"min", VecToJson(b.min)}, {"max", VecToJson(b.max)}});
  }
  json dynamic = json::array();
  for (const auto& b : scenario.world.dynamic_boxes) {
    dynamic.push_back({{"min", VecToJson(b.box.min)},
                       {"max", VecToJson(b.box.max)},
                       {"velocity", VecToJson(b.velocity)}});
  }
  json trajectory = json::array();
  for (const auto& w : scenario.waypoints) {
    trajectory.push_back({w.time, w.x, w.y, w.yaw});
  }
  const json j = {
      {"seed", scenario.seed},
      {"duration", scenario.duration},
      {"world",
       {{"ground_plane", scenario.world.ground_plane},
        {"boxes", boxes},
        {"dynamic_boxes", dynamic}}},
      {"trajectory", trajectory},
      {"sensors", SensorsToJson(scenario.sensors)},
  };
  WriteText(path, j.dump(1) + "\n");
}

void WriteSensorLog(const std::string& directory, const SensorLog& log) {
  const fs::path root(directory);
  fs::create_directories(root / "scans");
  std::ostringstream index, truth, gps;
  char buf[256];
  std::string last_stamp;
  for (const auto& e : log.events) {
    std::snprintf(buf, sizeof(buf), "%.9f ", e.time);
    const std::string stamp = buf;
    index << stamp;
    switch (e.type) {
      case EventType::kEncoder: {
        const auto& t = log.ticks[e.index];
        index << "enc " << t.pulses_left << ' ' << t.pulses_right << '\n';
        break;
      }
      case EventType::kGps: {
        const auto& g = log.gps[e.index];
        std::snprintf(buf, sizeof(buf), "gps %.9f %.9f %.9f\n", g.position.x(),
                      g.position.y(), g.position.z());
        index << buf;
        break;
      }
      case EventType::kScan: {
        std::snprintf(buf, sizeof(buf), "scans/%06zu.xyz", e.index);
        index << "scan " << buf << '\n';
        WriteXyz((root / buf).string(), log.scans[e.index]);
        break;
      }
    }
    // One ground-truth pose per distinct event time.
    if (stamp != last_stamp) {
      truth << stamp << PoseFields(e.ground_truth) << '\n';
      last_stamp = stamp;
    }
  }
  for (const auto& g : log.gps) {
    std::snprintf(buf, sizeof(buf), "%.9f %.9f %.9f %.9f\n", g.time,
                  g.position.x(), g.position.y(), g.position.z());
    gps << buf;
  }
  WriteText(root / "index.txt", index.str());
  WriteText(root / "groundtruth.txt", truth.str());
  WriteText(root / "gps.txt", gps.str());
  WriteText(root / "sensors.json", SensorsToJson(log.sensors).dump(1) + "\n");
  WriteEncoderStream((root / "encoder.txt").string(), log.ticks);
}

SensorLog ReadSensorLog(const std::string& directory) {
  const fs::path root(directory);
  SensorLog log;
  log.sensors = SensorsFromJson(ReadJson((root / "sensors.json").string()));

  std::ifstream index(root / "index.txt");
  std::ifstream truth(root / "groundtruth.txt");
  if (!index || !truth) {
    throw Error(ErrorCode::kIo, directory + " is not a sensor log directory");
  }
  std::string line, truth_line;
  std::size_t line_no = 0;
  bool have_truth = false;
  double truth_time = 0.0;
  Pose3d truth_pose;
  while (std::getline(index, line)) {
    ++line_no;
    if (!IsContent(line)) continue;
    auto fail = [&](const std::string& what) {
      throw Error(ErrorCode::kParse, "index.txt:" + std::to_string(line_no) +
                                         ": " + what);
    };
    std::istringstream s(line);
    LogEvent e{};
    std::string type;
    if (!(s >> e.time >> type)) fail("expected time and type");
    if (type == "enc") {
      EncoderTick t;
      t.timestamp = e.time;
      if (!(s >> t.pulses_left >> t.pulses_right)) fail("bad encoder payload");
      e.type = EventType::kEncoder;
      e.index = log.ticks.size();
      log.ticks.push_back(t);
    } else if (type == "gps") {
      GpsFix g{e.time, Eigen::Vector3d::Zero()};
      if (!(s >> g.position.x() >> g.position.y() >> g.position.z())) {
        fail("bad GPS payload");
      }
      e.type = EventType::kGps;
      e.index = log.gps.size();
      log.gps.push_back(g);
    } else if (type == "scan") {
      std::string file;
      if (!(s >> file)) fail("missing scan file");
      PointCloud scan = ReadXyz((root / file).string());
      scan.set_timestamp(e.time);
      e.type = EventType::kScan;
      e.index = log.scans.size();
      log.scans.push_back(std::move(scan));
    } else {
      fail("unknown event type " + type);
    }
    while (!have_truth || truth_time < e.time) {
      do {
        if (!std::getline(truth, truth_line)) fail("groundtruth.txt too short");
      } while (!IsContent(truth_line));
      std::istringstream ts(truth_line);
      double v[7];
      ts >> truth_time;
      for (double& x : v) ts >> x;
      if (!ts) fail("bad ground-truth line");
      truth_pose = Pose3d(Eigen::Quaterniond(v[6], v[3], v[4], v[5]),
                          Eigen::Vector3d(v[0], v[1], v[2]));
      have_truth = true;
    }
    if (truth_time != e.time) fail("no ground-truth pose at this time");
    e.ground_truth = truth_pose;
    log.events.push_back(e);
  }
  if (log.events.empty()) throw Error(ErrorCode::kEmptyInput, "empty log");
  return log;
}

}  // namespace ptloc
