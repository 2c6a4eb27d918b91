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

#include "ptloc/cli.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ptloc/cloud.h"
#include "ptloc/error.h"
#include "ptloc/eval.h"
#include "ptloc/pipeline.h"
#include "ptloc/sim.h"

namespace ptloc {
namespace {

constexpr int kUsageError = 1;
constexpr int kRuntimeError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// JSON scalars become "--key value" tokens. Objects named after the active
// subcommand are flattened; objects for other subcommands are ignored.
void AppendJson(const nlohmann::json& config, const std::string& subcommand,
                std::vector<std::string>* tokens) {
  if (!config.is_object()) throw UsageError("config root must be an object");
  for (const auto& [key, value] : config.items()) {
    if (value.is_object()) {
      if (key == subcommand) AppendJson(value, subcommand, tokens);
      continue;
    }
    if (value.is_null()) continue;
    const std::string flag = "--" + key;
    if (value.is_boolean()) {
      tokens->push_back(flag + (value.get<bool>() ? "" : "=false"));
    } else if (value.is_string()) {
      tokens->push_back(flag);
      tokens->push_back(value.get<std::string>());
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& item : value) {
        if (!joined.empty()) joined += ',';
        joined += item.is_string() ? item.get<std::string>() : item.dump();
      }
      tokens->push_back(flag);
      tokens->push_back(joined);
    } else {
      tokens->push_back(flag);
      tokens->push_back(value.dump());
    }
  }
}

// Replaces "--config <file>" with the file's settings, placed ahead of the
// explicit arguments so that the command line wins.
std::vector<std::string> ExpandConfig(const std::vector<std::string>& args) {
  std::size_t sub = 0;
  while (sub < args.size() && !args[sub].empty() && args[sub][0] == '-') ++sub;
  if (sub == args.size()) return args;

  std::optional<std::string> path;
  std::vector<std::string> rest;
  for (std::size_t i = sub + 1; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 == args.size()) throw UsageError("--config needs a file");
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (!path) return args;

  std::ifstream in(*path);
  if (!in) throw UsageError("cannot open config " + *path);
  nlohmann::json config;
  try {
    in >> config;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("bad config " + *path + ": " + e.what());
  }
  std::vector<std::string> out(args.begin(), args.begin() + sub + 1);
  AppendJson(config, args[sub], &out);
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

std::vector<double> ParseList(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("bad number in list: " + item);
    }
  }
  return values;
}

void AddConfigOption(CLI::App* app) {
  // Handled before parsing; declared so that it shows in --help.
  app->add_option("--config", "JSON file with option values");
}

struct SimulateArgs {
  std::string scenario;
  std::string outdir;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
};

int Simulate(const SimulateArgs& args) {
  Scenario scenario = LoadScenario(args.scenario);
  if (args.seed) scenario.seed = *args.seed;
  if (args.duration) scenario.duration = *args.duration;
  const SensorLog log = RunScenario(scenario);
  WriteSensorLog(args.outdir, log);
  std::printf("scans %zu\nencoder ticks %zu\ngps fixes %zu\n",
              log.scans.size(), log.ticks.size(), log.gps.size());
  return 0;
}

struct BuildMapArgs {
  std::string sensorlog;
  std::string map;
  std::string trajectory;
  std::string graph;
  LogMappingOptions options;
  bool no_gps = false;
  bool no_loops = false;
};

int BuildMapCommand(BuildMapArgs args) {
  args.options.use_gps = !args.no_gps;
  args.options.graph.detect_loops = !args.no_loops;
  const SensorLog log = ReadSensorLog(args.sensorlog);
  const LogMappingResult result = BuildMapFromLog(log, args.options);
  WriteXyz(args.map, result.build.map);
  WriteTrajectory(args.trajectory, result.keyframe_trajectory);
  if (!args.graph.empty()) SaveGraph(args.graph, result.build.graph);
  std::printf("keyframes %zu\ngps edges %zu\nloop edges %zu\n"
              "map points %zu\nlm iterations %d\nfinal cost %.9g\n",
              result.keyframes, result.gps_edges,
              result.build.loop_edges, result.build.map.size(),
              result.build.report.iterations,
              result.build.report.accepted_costs.empty()
                  ? 0.0
                  : result.build.report.accepted_costs.back());
  return 0;
}

struct LocalizeArgs {
  std::string map;
  std::string sensorlog;
  std::string output;
  std::string lidar_output;
  double map_voxel = 0.2;
  LocalizeOptions options;
  bool no_gps = false;
};

int LocalizeCommand(LocalizeArgs args) {
  args.options.use_gps = !args.no_gps;
  const MapIndex map = MapIndex::FromSparse(ReadXyz(args.map), args.map_voxel);
  const SensorLog log = ReadSensorLog(args.sensorlog);
  const LocalizeResult result = LocalizeLog(map, log, args.options);
  WriteTrajectory(args.output, result.fused);
  if (!args.lidar_output.empty()) WriteTrajectory(args.lidar_output, result.lidar);
  std::printf("fused poses %zu\naccepted scans %zu\nrejected scans %zu\n"
              "recoveries %zu\n",
              result.fused.size(), result.accepted_scans,
              result.rejected_scans, result.recoveries);
  std::fputs(result.timing.Format().c_str(), stdout);
  return 0;
}

struct EvaluateArgs {
  std::string estimate;
  std::string ground_truth;
  bool by_length = false;
  bool csv = false;
  std::string lengths = "100,200,300,400,500,600,700,800";
};

int EvaluateCommand(const EvaluateArgs& args) {
  const std::vector<double> lengths = ParseList(args.lengths);
  const PoseTrajectory estimate = ReadTrajectory(args.estimate);
  const PoseTrajectory truth = ReadTrajectory(args.ground_truth);
  const ErrorStats stats = Stats(ErrorSeries(estimate, truth));
  std::fputs(FormatStats(stats).c_str(), stdout);
  if (args.csv) std::fputs(FormatStatsCsv(stats).c_str(), stdout);
  if (args.by_length) {
    std::fputs(FormatLengthTable(ErrorByLength(estimate, truth, lengths)).c_str(),
               stdout);
  }
  return 0;
}

struct DownsampleArgs {
  std::string input;
  std::string output;
  double voxel = 0.0;
};

int DownsampleCommand(const DownsampleArgs& args) {
  const PointCloud in = ReadXyz(args.input);
  const PointCloud out = VoxelDownsample(in, args.voxel);
  WriteXyz(args.output, out);
  std::printf("points in %zu\npoints out %zu\n", in.size(), out.size());
  return 0;
}

}  // namespace

int RunCli(int argc, const char* const* argv) {
  CLI::App app{"Point cloud map building and localization", "ptloc"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate a sensor log");
  simulate->add_option("scenario", sim.scenario, "Scenario JSON")->required();
  simulate->add_option("outdir", sim.outdir, "Sensor log directory")->required();
  simulate->add_option("--seed", sim.seed, "Override the scenario seed");
  simulate->add_option("--duration", sim.duration, "Override the duration [s]")
      ->check(CLI::PositiveNumber);
  AddConfigOption(simulate);

  BuildMapArgs bm;
  MapBuildParams& gp = bm.options.graph;
  auto* build = app.add_subcommand("build-map", "Build a point cloud map");
  build->add_option("sensorlog", bm.sensorlog, "Sensor log directory")->required();
  build->add_option("map", bm.map, "Output map (.xyz)")->required();
  build->add_option("trajectory", bm.trajectory, "Output keyframe trajectory")
      ->required();
  build->add_option("--graph", bm.graph, "Also save the optimized pose graph");
  build->add_flag("--no-gps", bm.no_gps, "Ignore GPS fixes");
  build->add_flag("--no-loops", bm.no_loops, "Skip loop closure detection");
  build->add_option("--keyframe-distance", bm.options.keyframe_distance)
      ->check(CLI::PositiveNumber)->capture_default_str();
  build->add_option("--keyframe-angle", bm.options.keyframe_angle)
      ->check(CLI::PositiveNumber)->capture_default_str();
  build->add_option("--scan-voxel", bm.options.scan_voxel)
      ->check(CLI::PositiveNumber)->capture_default_str();
  build->add_option("--map-voxel", gp.map_voxel)
      ->check(CLI::PositiveNumber)->capture_default_str();
  build->add_option("--gps-sigma", gp.gps_sigma)
      ->check(CLI::PositiveNumber)->capture_default_str();
  build->add_option("--odometry-sigma", gp.odometry_sigma_per_meter)
      ->check(CLI::PositiveNumber)->capture_default_str();
  build->add_option("--loop-radius", gp.loop_radius)
      ->check(CLI::PositiveNumber)->capture_default_str();
  build->add_option("--loop-min-gap", gp.loop_min_index_gap)
      ->check(CLI::PositiveNumber)->capture_default_str();
  build->add_option("--lm-max-iterations", gp.lm.max_iterations)
      ->check(CLI::PositiveNumber)->capture_default_str();
  AddConfigOption(build);

  LocalizeArgs loc;
  LocalizerConfig& lc = loc.options.config;
  auto* localize = app.add_subcommand("localize", "Localize against a map");
  localize->add_option("map", loc.map, "Map (.xyz)")->required();
  localize->add_option("sensorlog", loc.sensorlog, "Sensor log directory")
      ->required();
  localize->add_option("output", loc.output, "Output fused trajectory")
      ->required();
  localize->add_option("--lidar-output", loc.lidar_output,
                       "Also write the accepted scan poses");
  localize->add_flag("--half-fov", loc.options.half_fov,
                     "Keep only the forward 180 degrees of each scan");
  localize->add_flag("--no-gps", loc.no_gps,
                     "Never re-seed from GPS after losing localization");
  localize->add_option("--map-voxel", loc.map_voxel)
      ->check(CLI::PositiveNumber)->capture_default_str();
  localize->add_option("--scan-voxel", lc.scan_voxel)
      ->check(CLI::PositiveNumber)->capture_default_str();
  localize->add_option("--gain-position", lc.gain_position)
      ->check(CLI::Range(0.0, 1.0))->capture_default_str();
  localize->add_option("--gain-heading", lc.gain_heading)
      ->check(CLI::Range(0.0, 1.0))->capture_default_str();
  localize->add_option("--icp-delta", lc.icp.delta)
      ->check(CLI::PositiveNumber)->capture_default_str();
  localize->add_option("--icp-max-iterations", lc.icp.max_iterations)
      ->check(CLI::PositiveNumber)->capture_default_str();
  localize->add_option("--min-inliers", lc.icp.min_inliers)
      ->check(CLI::PositiveNumber)->capture_default_str();
  localize->add_option("--roi-margin", lc.roi_range_margin)
      ->check(CLI::PositiveNumber)->capture_default_str();
  localize->add_option("--max-rejections", lc.max_consecutive_rejections)
      ->check(CLI::PositiveNumber)->capture_default_str();
  AddConfigOption(localize);

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Compare two trajectories");
  evaluate->add_option("estimate", ev.estimate, "Estimated trajectory")
      ->required();
  evaluate->add_option("ground_truth", ev.ground_truth, "Reference trajectory")
      ->required();
  evaluate->add_flag("--by-length", ev.by_length,
                     "Also report relative error per segment length");
  evaluate->add_flag("--csv", ev.csv, "Also print the statistics as CSV");
  evaluate->add_option("--lengths", ev.lengths,
                       "Comma separated segment lengths [m]")
      ->capture_default_str();
  AddConfigOption(evaluate);

  DownsampleArgs ds;
  auto* downsample = app.add_subcommand("downsample", "Voxel grid filter");
  downsample->add_option("input", ds.input, "Input cloud (.xyz)")->required();
  downsample->add_option("output", ds.output, "Output cloud (.xyz)")->required();
  downsample->add_option("--voxel", ds.voxel, "Voxel edge [m]")
      ->required()
      ->check(CLI::PositiveNumber);
  AddConfigOption(downsample);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = ExpandConfig(args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "ptloc: " << e.what() << "\n\n";
    const auto selected = app.get_subcommands();
    std::cerr << (selected.empty() ? app.help() : selected.front()->help());
    return kUsageError;
  } catch (const UsageError& e) {
    std::cerr << "ptloc: " << e.what() << "\n\n" << app.help();
    return kUsageError;
  }

  try {
    if (simulate->parsed()) return Simulate(sim);
    if (build->parsed()) return BuildMapCommand(bm);
    if (localize->parsed()) return LocalizeCommand(loc);
    if (evaluate->parsed()) return EvaluateCommand(ev);
    if (downsample->parsed()) return DownsampleCommand(ds);
  } catch (const UsageError& e) {
    std::cerr << "ptloc: " << e.what() << "\n";
    return kUsageError;
  } catch (const Error& e) {
    std::cerr << "ptloc: " << ErrorCodeName(e.code()) << ": " << e.what()
              << "\n";
    return kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "ptloc: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}

}  // namespace ptloc
