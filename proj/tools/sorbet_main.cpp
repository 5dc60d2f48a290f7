// Copyright 2026 The Sorbet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sorbet/errors.hpp"
#include "sorbet/geometry.hpp"
#include "sorbet/pcd_io.hpp"
#include "sorbet/pipeline.hpp"

namespace
{

namespace fs = std::filesystem;
using nlohmann::ordered_json;

// Minimal '*' wildcard on the filename component, so globs work even when
// the shell passes them through unexpanded.
std::vector<fs::path> expand_glob(const std::string & arg)
{
  if (arg.find('*') == std::string::npos) {
    return {fs::path(arg)};
  }
  const fs::path pattern(arg);
  const fs::path dir = pattern.parent_path().empty() ? fs::path(".") : pattern.parent_path();
  const std::string name = pattern.filename().string();
  const std::size_t star = name.find('*');
  const std::string prefix = name.substr(0, star);
  const std::string suffix = name.substr(star + 1);

  std::vector<fs::path> matches;
  if (!fs::is_directory(dir)) {
    return matches;
  }
  for (const auto & entry : fs::directory_iterator(dir)) {
    const std::string candidate = entry.path().filename().string();
    if (candidate.size() >= prefix.size() + suffix.size() &&
        candidate.compare(0, prefix.size(), prefix) == 0 &&
        candidate.compare(candidate.size() - suffix.size(), suffix.size(), suffix) == 0) {
      matches.push_back(entry.path());
    }
  }
  std::sort(matches.begin(), matches.end());
  return matches;
}

std::vector<std::string> split_csv_list(const std::string & arg)
{
  std::vector<std::string> out;
  std::string cur;
  for (char c : arg) {
    if (c == ',') {
      if (!cur.empty()) {
        out.push_back(cur);
      }
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) {
    out.push_back(cur);
  }
  return out;
}

void print_error_summary(const std::vector<sorbet::pipeline::FrameError> & errors)
{
  ordered_json j;
  j["errors"] = ordered_json::array();
  for (const auto & e : errors) {
    j["errors"].push_back({{"frame", e.frame}, {"type", e.error_type}, {"message", e.message}});
  }
  std::cerr << j.dump(2) << std::endl;
}

sorbet::pipeline::RunConfig load_config_or_default(const std::string & config_path)
{
  if (config_path.empty()) {
    return sorbet::pipeline::run_config_from_json_text("{}", "<defaults>");
  }
  return sorbet::pipeline::load_run_config(config_path);
}

int run_perturb(const std::string & config_path, const std::string & frames_arg, bool no_resume)
{
  const auto config = load_config_or_default(config_path);
  const std::vector<std::string> frames = split_csv_list(frames_arg);
  const auto result = sorbet::pipeline::cmd_perturb(config, frames, !no_resume);
  std::cout << "perturb: " << result.entries.size() << " outputs (" << result.reused
            << " reused), " << result.errors.size() << " frame errors\n";
  if (!result.errors.empty()) {
    print_error_summary(result.errors);
    return 1;
  }
  return 0;
}

int run_evaluate(
  const std::string & config_path, const std::string & baseline,
  const std::vector<std::string> & perturbed_args, const std::string & out_dir)
{
  const auto config = load_config_or_default(config_path);
  std::vector<fs::path> perturbed;
  for (const std::string & arg : perturbed_args) {
    for (const fs::path & p : expand_glob(arg)) {
      perturbed.push_back(p);
    }
  }
  if (perturbed.empty()) {
    throw sorbet::IoError("evaluate: no perturbed detection files matched");
  }
  const auto evaluations =
    sorbet::pipeline::cmd_evaluate(config, baseline, perturbed, out_dir);
  for (const auto & eval : evaluations) {
    std::cout << eval.report.variant << ": records=" << eval.report.record_count
              << " ldc=" << eval.report.ldc.count << " diff=" << eval.report.diff.count << "\n";
  }
  std::cout << "evaluate: wrote report.csv, report.json and plot data under " << out_dir << "\n";
  return 0;
}

int run_cascade(
  const std::string & config_path, const std::string & tracks, const std::string & deviations,
  const std::string & patterns_arg, double horizon, double dt, const std::string & out_path)
{
  const auto config = load_config_or_default(config_path);
  const auto table = sorbet::pipeline::cmd_cascade(
    config, tracks, deviations, split_csv_list(patterns_arg), horizon, dt);
  sorbet::pipeline::write_cascade_csv(table, out_path);
  std::cout << "cascade: " << table.rows.size() << " stat rows x " << table.pattern_names.size()
            << " patterns -> " << out_path << "\n";
  return 0;
}

int run_report(const std::string & input, const std::string & format, const std::string & out_path)
{
  const auto reports = sorbet::pipeline::read_report_json(input);
  if (format == "csv") {
    const fs::path target = out_path.empty() ? fs::path("report.csv") : fs::path(out_path);
    sorbet::pipeline::write_report_csv(reports, target);
    std::cout << "report: wrote " << target.string() << "\n";
  } else {
    const fs::path target = out_path.empty() ? fs::path("report.json") : fs::path(out_path);
    sorbet::pipeline::write_report_json(reports, target);
    std::cout << "report: wrote " << target.string() << "\n";
  }
  return 0;
}

int run_mock_detect(
  const std::string & config_path, const std::string & frames_arg, const std::string & clouds_dir,
  const std::string & out_path)
{
  const auto config = load_config_or_default(config_path);
  std::vector<std::string> frames = split_csv_list(frames_arg);
  if (frames.empty()) {
    frames = sorbet::pipeline::list_dataset_frames(config.dataset_root);
  }
  const fs::path cloud_root =
    clouds_dir.empty() ? config.dataset_root / "velodyne" : fs::path(clouds_dir);

  std::vector<sorbet::DetectionRecord> detections;
  for (const std::string & frame : frames) {
    auto cloud = sorbet::pcd_io::read_pointcloud(cloud_root / (frame + ".bin"));
    cloud.frame_id = frame;
    const auto labels =
      sorbet::pcd_io::read_labels(config.dataset_root / "label_2" / (frame + ".txt"));
    const auto calib =
      sorbet::pcd_io::read_calibration(config.dataset_root / "calib" / (frame + ".txt"));
    std::vector<sorbet::metrics::GtObject> gts;
    for (const auto & label : labels) {
      if (label.object_class == sorbet::ObjectClass::DontCare) {
        continue;
      }
      gts.push_back(
        {label.gt_id, label.object_class, sorbet::geometry::camera_box_to_lidar(label, calib)});
    }
    const auto dets = sorbet::mock_detector::detect(cloud, gts, config.mock);
    detections.insert(detections.end(), dets.begin(), dets.end());
  }
  sorbet::pcd_io::write_detections(detections, out_path);
  std::cout << "mock-detect: " << detections.size() << " detections over " << frames.size()
            << " frames -> " << out_path << "\n";
  return 0;
}

int run_predict(
  const std::string & tracks_path, double horizon, double dt, const std::string & out_path)
{
  const auto tracks = sorbet::pcd_io::read_tracks(tracks_path);
  std::vector<sorbet::Track> predictions;
  for (const auto & track : tracks) {
    const auto pred = sorbet::cascade::predict_constant_velocity(track, horizon, dt);
    sorbet::Track out;
    out.obstacle_id = track.obstacle_id;
    out.samples = pred.samples;
    predictions.push_back(std::move(out));
  }
  sorbet::pcd_io::write_tracks(predictions, out_path);
  std::cout << "predict: " << predictions.size() << " trajectories -> " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"LiDAR point-cloud perturbation and detection-robustness evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  std::string frames_arg;
  bool no_resume = false;
  auto * perturb_cmd = app.add_subcommand("perturb", "Generate the perturbed dataset");
  perturb_cmd->add_option("--config", config_path, "Run configuration (JSON)");
  perturb_cmd->add_option("--frames", frames_arg, "Comma-separated frame ids (default: all)");
  perturb_cmd->add_flag("--no-resume", no_resume, "Ignore a prior manifest and recompute");

  std::string baseline_path;
  std::vector<std::string> perturbed_args;
  std::string eval_out = "evaluation";
  auto * evaluate_cmd =
    app.add_subcommand("evaluate", "Compare perturbed detection runs with the baseline");
  evaluate_cmd->add_option("--config", config_path, "Run configuration (JSON)");
  evaluate_cmd->add_option("--baseline", baseline_path, "Baseline detections (line JSON)")
    ->required();
  evaluate_cmd
    ->add_option("--perturbed", perturbed_args, "Perturbed detection files (repeat or glob)")
    ->required();
  evaluate_cmd->add_option("--out", eval_out, "Output directory");

  std::string tracks_path;
  std::string deviations_path;
  std::string patterns_arg = "interval,all,remove-once";
  double horizon = 1.0;
  double dt = 0.1;
  std::string cascade_out = "cascade_report.csv";
  auto * cascade_cmd =
    app.add_subcommand("cascade", "Propagate detection deviations into trajectory prediction");
  cascade_cmd->add_option("--config", config_path, "Run configuration (JSON)");
  cascade_cmd->add_option("--tracks", tracks_path, "Track histories CSV")->required();
  cascade_cmd->add_option("--deviations", deviations_path, "Deviation plot-data CSV")->required();
  cascade_cmd->add_option("--patterns", patterns_arg, "interval,all,remove-once subset");
  cascade_cmd->add_option("--horizon", horizon, "Prediction horizon, seconds");
  cascade_cmd->add_option("--dt", dt, "Prediction step, seconds");
  cascade_cmd->add_option("--out", cascade_out, "Output CSV");

  std::string report_input;
  std::string report_format = "csv";
  std::string report_out;
  auto * report_cmd = app.add_subcommand("report", "Re-emit an evaluation report");
  report_cmd->add_option("--input", report_input, "report.json from evaluate")->required();
  report_cmd->add_option("--format", report_format, "csv|json")
    ->check(CLI::IsMember({"csv", "json"}));
  report_cmd->add_option("--out", report_out, "Output path");

  std::string clouds_dir;
  std::string detect_out = "detections.jsonl";
  auto * mock_cmd =
    app.add_subcommand("mock-detect", "Run the built-in deterministic detector stand-in");
  mock_cmd->add_option("--config", config_path, "Run configuration (JSON)");
  mock_cmd->add_option("--frames", frames_arg, "Comma-separated frame ids (default: all)");
  mock_cmd->add_option("--clouds", clouds_dir, "Cloud directory (default: dataset velodyne/)");
  mock_cmd->add_option("--out", detect_out, "Output detections file");

  std::string predict_tracks;
  std::string predict_out = "predictions.csv";
  auto * predict_cmd =
    app.add_subcommand("predict", "Run the built-in constant-velocity predictor");
  predict_cmd->add_option("--tracks", predict_tracks, "Track histories CSV")->required();
  predict_cmd->add_option("--horizon", horizon, "Prediction horizon, seconds");
  predict_cmd->add_option("--dt", dt, "Prediction step, seconds");
  predict_cmd->add_option("--out", predict_out, "Output CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (perturb_cmd->parsed()) {
      return run_perturb(config_path, frames_arg, no_resume);
    }
    if (evaluate_cmd->parsed()) {
      return run_evaluate(config_path, baseline_path, perturbed_args, eval_out);
    }
    if (cascade_cmd->parsed()) {
      return run_cascade(
        config_path, tracks_path, deviations_path, patterns_arg, horizon, dt, cascade_out);
    }
    if (report_cmd->parsed()) {
      return run_report(report_input, report_format, report_out);
    }
    if (mock_cmd->parsed()) {
      return run_mock_detect(config_path, frames_arg, clouds_dir, detect_out);
    }
    if (predict_cmd->parsed()) {
      return run_predict(predict_tracks, horizon, dt, predict_out);
    }
  } catch (const std::exception & e) {
    ordered_json j;
    j["errors"] =
      ordered_json::array({{{"type", sorbet::error_type_name(e)}, {"message", e.what()}}});
    std::cerr << j.dump(2) << std::endl;
    return 1;
  }
  return 0;
}
