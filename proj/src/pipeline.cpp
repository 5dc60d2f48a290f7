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

#include "sorbet/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "sorbet/errors.hpp"
#include "sorbet/geometry.hpp"
#include "sorbet/pcd_io.hpp"

namespace sorbet::pipeline
{

namespace
{

using nlohmann::ordered_json;

std::string fmt_double(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

perturb::SuiteConfig suite_from_json(const ordered_json & j)
{
  perturb::SuiteConfig suite = perturb::SuiteConfig::default_suite(0);
  suite.master_seed = j.value("master_seed", std::uint64_t{0});
  suite.bound = j.value("bound_meters", 0.02);
  suite.removal_rate = j.value("removal_rate", 1e-4);
  suite.decrease_fraction = j.value("decrease_fraction", 0.60);
  suite.increase_fraction = j.value("increase_fraction", 0.67);

  if (j.contains("distance_profile")) {
    suite.profile.breakpoints.clear();
    for (const auto & bp : j.at("distance_profile")) {
      suite.profile.breakpoints.push_back(
        {bp.at("min_range").get<double>(), bp.at("scale").get<double>()});
    }
    suite.profile.validate();
  }

  if (j.contains("variants")) {
    suite.variants.clear();
    for (const auto & vj : j.at("variants")) {
      perturb::SuiteVariant v;
      v.name = vj.at("name").get<std::string>();
      v.spec.kind = perturb::kind_from_string(vj.at("kind").get<std::string>());
      if (vj.contains("distribution")) {
        v.spec.distribution =
          perturb::distribution_from_string(vj.at("distribution").get<std::string>());
      }
      if (vj.contains("direction")) {
        v.spec.direction = perturb::direction_from_string(vj.at("direction").get<std::string>());
      }
      v.spec.bound = vj.value("bound_meters", suite.bound);
      v.spec.removal_rate = vj.value("removal_rate", suite.removal_rate);
      v.spec.decrease_fraction = vj.value("decrease_fraction", suite.decrease_fraction);
      v.spec.increase_fraction = vj.value("increase_fraction", suite.increase_fraction);
      v.local_scope = vj.value("scope", std::string("local")) == "local";
      perturb::validate_spec(v.spec);
      suite.variants.push_back(std::move(v));
    }
  } else {
    // default 15-variant suite, rebuilt with the configured knobs
    perturb::SuiteConfig defaults = perturb::SuiteConfig::default_suite(suite.master_seed);
    suite.variants.clear();
    for (perturb::SuiteVariant v : defaults.variants) {
      v.spec.bound = suite.bound;
      v.spec.removal_rate = suite.removal_rate;
      v.spec.decrease_fraction = suite.decrease_fraction;
      v.spec.increase_fraction = suite.increase_fraction;
      suite.variants.push_back(std::move(v));
    }
  }
  return suite;
}

std::map<std::string, std::vector<DetectionRecord>> group_by_frame(
  const std::vector<DetectionRecord> & dets)
{
  std::map<std::string, std::vector<DetectionRecord>> grouped;
  for (const DetectionRecord & d : dets) {
    grouped[d.frame_id].push_back(d);
  }
  return grouped;
}

}  // namespace

RunConfig run_config_from_json_text(const std::string & text, const std::string & origin)
{
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception & e) {
    throw SchemaError(origin + ": invalid JSON: " + e.what());
  }

  RunConfig config;
  try {
    if (j.contains("dataset_root")) {
      config.dataset_root = j.at("dataset_root").get<std::string>();
    } else if (const char * env = std::getenv(kDatasetRootEnv)) {
      config.dataset_root = env;
    }
    if (j.contains("output_root")) {
      config.output_root = j.at("output_root").get<std::string>();
    }
    config.parallelism = j.value("parallelism", 1);
    config.range_filter = j.value("range_filter_meters", 10.0);

    if (j.contains("thresholds")) {
      const auto & t = j.at("thresholds");
      config.thresholds.match_iou = t.value("match_iou", 0.25);
      config.thresholds.detect_iou_car = t.value("detect_iou_car", 0.7);
      config.thresholds.detect_iou_ped_cyc = t.value("detect_iou_ped_cyc", 0.5);
      config.ldc_threshold = t.value("ldc_meters", 0.1);
    }
    if (j.contains("mock_detector")) {
      const auto & m = j.at("mock_detector");
      config.mock.min_points = m.value("min_points", std::size_t{20});
      config.mock.min_extent = m.value("min_extent", 0.05);
      config.mock.score_scale = m.value("score_scale", 50.0);
    }
    // the suite is either inline or a reference to its own JSON file
    if (j.contains("suite_file")) {
      if (j.contains("suite")) {
        throw SchemaError(origin + ": give either suite or suite_file, not both");
      }
      const std::filesystem::path suite_path = j.at("suite_file").get<std::string>();
      std::ifstream suite_in(suite_path);
      if (!suite_in) {
        throw IoError(origin + ": cannot open suite_file " + suite_path.string());
      }
      ordered_json sj;
      try {
        suite_in >> sj;
      } catch (const nlohmann::json::exception & e) {
        throw SchemaError(suite_path.string() + ": invalid JSON: " + e.what());
      }
      config.suite = suite_from_json(sj);
    } else {
      config.suite = suite_from_json(j.contains("suite") ? j.at("suite") : ordered_json::object());
    }
  } catch (const nlohmann::json::exception & e) {
    throw SchemaError(origin + ": bad config field: " + e.what());
  }

  if (!(config.thresholds.match_iou > 0.0 && config.thresholds.match_iou <= 1.0) ||
      !(config.thresholds.detect_iou_car > 0.0 && config.thresholds.detect_iou_car <= 1.0) ||
      !(config.thresholds.detect_iou_ped_cyc > 0.0 &&
        config.thresholds.detect_iou_ped_cyc <= 1.0)) {
    throw ValidationError(origin + ": IoU thresholds must lie in (0, 1]");
  }
  if (!(config.ldc_threshold > 0.0)) {
    throw ValidationError(origin + ": ldc threshold must be > 0");
  }
  if (config.parallelism < 1) {
    throw ValidationError(origin + ": parallelism must be >= 1");
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw IoError("load_run_config: cannot open " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return run_config_from_json_text(ss.str(), path.string());
}

FrameLoader dataset_frame_loader(const std::filesystem::path & dataset_root)
{
  return [dataset_root](const std::string & frame_id) {
    FrameInputs inputs;
    inputs.cloud = pcd_io::read_pointcloud(dataset_root / "velodyne" / (frame_id + ".bin"));
    inputs.labels = pcd_io::read_labels(dataset_root / "label_2" / (frame_id + ".txt"));
    inputs.calib = pcd_io::read_calibration(dataset_root / "calib" / (frame_id + ".txt"));
    return inputs;
  };
}

std::vector<std::string> list_dataset_frames(const std::filesystem::path & dataset_root)
{
  const std::filesystem::path dir = dataset_root / "velodyne";
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("list_dataset_frames: missing directory " + dir.string());
  }
  std::vector<std::string> frames;
  for (const auto & entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".bin") {
      frames.push_back(entry.path().stem().string());
    }
  }
  std::sort(frames.begin(), frames.end());
  return frames;
}

FileSink::FileSink(std::filesystem::path output_root, std::vector<ManifestEntry> prior_entries)
: output_root_(std::move(output_root)), prior_(std::move(prior_entries))
{
  for (std::size_t i = 0; i < prior_.size(); ++i) {
    prior_index_[prior_[i].variant + "/" + prior_[i].frame] = i;
  }
}

std::optional<ManifestEntry> FileSink::reusable(
  const std::string & variant, const std::string & frame)
{
  const auto it = prior_index_.find(variant + "/" + frame);
  if (it == prior_index_.end()) {
    return std::nullopt;
  }
  const ManifestEntry & e = prior_[it->second];
  if (!e.path.empty() && std::filesystem::exists(output_root_ / e.path)) {
    return e;
  }
  return std::nullopt;
}

std::string FileSink::write(
  const std::string & variant, const std::string & frame, const PointCloud & cloud)
{
  const std::filesystem::path rel = std::filesystem::path(variant) / (frame + ".bin");
  const std::filesystem::path full = output_root_ / rel;
  std::filesystem::create_directories(full.parent_path());
  pcd_io::write_pointcloud(cloud, full);
  return rel.generic_string();
}

BatchResult run_perturb_batch(
  const std::vector<std::string> & frame_ids, const FrameLoader & loader,
  const perturb::SuiteConfig & suite, int parallelism, PerturbSink & sink)
{
  struct Slot
  {
    std::vector<ManifestEntry> entries;
    std::optional<FrameError> error;
    std::size_t reused = 0;
  };
  std::vector<Slot> slots(frame_ids.size());
  std::atomic<std::size_t> cursor{0};
  std::mutex sink_mutex;  // reusable() bookkeeping only; writes run unlocked

  auto worker = [&]() {
    while (true) {
      const std::size_t fi = cursor.fetch_add(1);
      if (fi >= frame_ids.size()) {
        return;
      }
      const std::string & frame_id = frame_ids[fi];
      Slot & slot = slots[fi];
      try {
        std::vector<perturb::SuiteVariant> to_run;
        for (const perturb::SuiteVariant & variant : suite.variants) {
          std::optional<ManifestEntry> prior;
          {
            std::lock_guard<std::mutex> lock(sink_mutex);
            prior = sink.reusable(variant.name, frame_id);
          }
          if (prior.has_value()) {
            slot.entries.push_back(*prior);
            ++slot.reused;
          } else {
            to_run.push_back(variant);
          }
        }
        if (to_run.empty()) {
          continue;
        }

        const FrameInputs inputs = loader(frame_id);
        PointCloud cloud = inputs.cloud;
        cloud.frame_id = frame_id;

        perturb::SuiteConfig frame_suite = suite;
        frame_suite.variants = to_run;
        std::vector<perturb::SuiteResult> results =
          perturb::build_suite(cloud, inputs.labels, inputs.calib, frame_suite);

        for (perturb::SuiteResult & r : results) {
          ManifestEntry entry;
          entry.frame = frame_id;
          entry.variant = r.name;
          entry.seed = r.spec.seed;
          entry.kind = perturb::to_string(r.spec.kind);
          if (r.spec.distribution) {
            entry.distribution = perturb::to_string(*r.spec.distribution);
          }
          if (r.spec.direction) {
            entry.direction = perturb::to_string(*r.spec.direction);
          }
          entry.bound = r.spec.bound;
          entry.moved = r.outcome.moved.size();
          entry.removed = r.outcome.removed.size();
          entry.added = r.outcome.added_count;
          entry.max_shift = r.outcome.max_shift;
          entry.path = sink.write(r.name, frame_id, r.outcome.cloud);
          slot.entries.push_back(std::move(entry));
        }
      } catch (const std::exception & e) {
        slot.entries.clear();
        slot.error = FrameError{frame_id, error_type_name(e), e.what()};
      }
    }
  };

  const int workers = std::max(1, parallelism);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int i = 0; i < workers; ++i) {
    pool.emplace_back(worker);
  }
  for (std::thread & t : pool) {
    t.join();
  }

  // Deterministic order regardless of worker interleaving: frames in input
  // order, variants in suite order.
  std::map<std::string, std::size_t> variant_order;
  for (std::size_t i = 0; i < suite.variants.size(); ++i) {
    variant_order[suite.variants[i].name] = i;
  }
  BatchResult result;
  for (Slot & slot : slots) {
    if (slot.error) {
      result.errors.push_back(*slot.error);
      continue;
    }
    std::sort(
      slot.entries.begin(), slot.entries.end(),
      [&](const ManifestEntry & a, const ManifestEntry & b) {
        return variant_order[a.variant] < variant_order[b.variant];
      });
    for (ManifestEntry & e : slot.entries) {
      result.entries.push_back(std::move(e));
    }
    result.reused += slot.reused;
  }
  return result;
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw IoError("load_manifest: cannot open " + path.string());
  }
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception & e) {
    throw FormatError("load_manifest: " + path.string() + ": " + e.what());
  }
  std::vector<ManifestEntry> entries;
  for (const auto & ej : j.value("entries", ordered_json::array())) {
    ManifestEntry e;
    e.frame = ej.at("frame").get<std::string>();
    e.variant = ej.at("variant").get<std::string>();
    e.seed = ej.at("seed").get<std::uint64_t>();
    e.kind = ej.at("kind").get<std::string>();
    e.distribution = ej.value("distribution", std::string());
    e.direction = ej.value("direction", std::string());
    e.bound = ej.at("bound").get<double>();
    e.moved = ej.at("moved").get<std::size_t>();
    e.removed = ej.at("removed").get<std::size_t>();
    e.added = ej.at("added").get<std::size_t>();
    e.max_shift = ej.at("max_shift").get<double>();
    e.path = ej.value("path", std::string());
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_manifest(
  const std::filesystem::path & path, const perturb::SuiteConfig & suite,
  const std::vector<ManifestEntry> & entries)
{
  ordered_json j;
  j["version"] = 1;
  j["master_seed"] = suite.master_seed;
  ordered_json names = ordered_json::array();
  for (const perturb::SuiteVariant & v : suite.variants) {
    names.push_back(v.name);
  }
  j["variants"] = names;
  ordered_json ej = ordered_json::array();
  for (const ManifestEntry & e : entries) {
    ordered_json item;
    item["frame"] = e.frame;
    item["variant"] = e.variant;
    item["seed"] = e.seed;
    item["kind"] = e.kind;
    if (!e.distribution.empty()) {
      item["distribution"] = e.distribution;
    }
    if (!e.direction.empty()) {
      item["direction"] = e.direction;
    }
    item["bound"] = e.bound;
    item["moved"] = e.moved;
    item["removed"] = e.removed;
    item["added"] = e.added;
    item["max_shift"] = e.max_shift;
    item["path"] = e.path;
    ej.push_back(std::move(item));
  }
  j["entries"] = std::move(ej);

  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw IoError("write_manifest: cannot open " + path.string() + " for writing");
  }
  out << j.dump(2) << "\n";
}

BatchResult cmd_perturb(const RunConfig & config, const std::vector<std::string> & frames, bool resume)
{
  if (config.output_root.empty()) {
    throw ValidationError("cmd_perturb: output_root is not configured");
  }
  std::vector<std::string> frame_ids =
    frames.empty() ? list_dataset_frames(config.dataset_root) : frames;

  std::filesystem::create_directories(config.output_root);
  const std::filesystem::path manifest_path = config.output_root / "manifest.json";
  std::vector<ManifestEntry> prior;
  if (resume && std::filesystem::exists(manifest_path)) {
    prior = load_manifest(manifest_path);
  }

  FileSink sink(config.output_root, std::move(prior));
  BatchResult result = run_perturb_batch(
    frame_ids, dataset_frame_loader(config.dataset_root), config.suite, config.parallelism, sink);
  write_manifest(manifest_path, config.suite, result.entries);
  return result;
}

VariantEvaluation evaluate_detections(
  const RunConfig & config, const std::string & variant_name,
  const std::vector<DetectionRecord> & baseline, const std::vector<DetectionRecord> & perturbed)
{
  const auto base_by_frame = group_by_frame(baseline);
  const auto pert_by_frame = group_by_frame(perturbed);

  std::set<std::string> base_frames;
  for (const auto & [frame, _] : base_by_frame) {
    base_frames.insert(frame);
  }
  std::set<std::string> pert_frames;
  for (const auto & [frame, _] : pert_by_frame) {
    pert_frames.insert(frame);
  }
  if (base_frames != pert_frames) {
    throw FrameMismatch(
      "evaluate_detections(" + variant_name + "): baseline covers " +
      std::to_string(base_frames.size()) + " frames, perturbed covers " +
      std::to_string(pert_frames.size()) + " and the sets differ");
  }

  const FrameLoader loader = dataset_frame_loader(config.dataset_root);
  metrics::ReportAccumulator acc(config.ldc_threshold);
  for (const auto & [frame_id, base_dets] : base_by_frame) {
    std::vector<GroundTruthLabel> labels =
      pcd_io::read_labels(config.dataset_root / "label_2" / (frame_id + ".txt"));
    const Calibration calib =
      pcd_io::read_calibration(config.dataset_root / "calib" / (frame_id + ".txt"));
    std::vector<metrics::GtObject> gts;
    for (const GroundTruthLabel & label : labels) {
      if (label.object_class == ObjectClass::DontCare) {
        continue;
      }
      gts.push_back(
        {label.gt_id, label.object_class, geometry::camera_box_to_lidar(label, calib)});
    }
    const auto base_matches = metrics::match_to_ground_truth(gts, base_dets, config.thresholds);
    const auto pert_matches =
      metrics::match_to_ground_truth(gts, pert_by_frame.at(frame_id), config.thresholds);
    acc.add_frame(base_matches, pert_matches);
  }

  VariantEvaluation eval;
  eval.report = acc.finalize(variant_name);
  eval.records = acc.records();
  return eval;
}

std::vector<VariantEvaluation> cmd_evaluate(
  const RunConfig & config, const std::filesystem::path & baseline_path,
  const std::vector<std::filesystem::path> & perturbed_paths, const std::filesystem::path & out_dir)
{
  const std::vector<DetectionRecord> baseline = pcd_io::read_detections(baseline_path);
  std::filesystem::create_directories(out_dir);

  std::vector<VariantEvaluation> evaluations;
  std::vector<metrics::VariantReport> reports;
  for (const std::filesystem::path & path : perturbed_paths) {
    const std::string variant = path.stem().string();
    VariantEvaluation eval =
      evaluate_detections(config, variant, baseline, pcd_io::read_detections(path));
    write_plot_data_csv(eval.records, out_dir / ("plotdata_" + variant + ".csv"));
    reports.push_back(eval.report);
    evaluations.push_back(std::move(eval));
  }
  write_report_csv(reports, out_dir / "report.csv");
  write_report_json(reports, out_dir / "report.json");
  return evaluations;
}

void write_report_csv(
  const std::vector<metrics::VariantReport> & reports, const std::filesystem::path & path)
{
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw IoError("write_report_csv: cannot open " + path.string() + " for writing");
  }
  out << "variant,metric,value\n";
  for (const metrics::VariantReport & r : reports) {
    out << r.variant << ",x," << fmt_double(r.median_dx) << "\n";
    out << r.variant << ",y," << fmt_double(r.median_dy) << "\n";
    out << r.variant << ",z," << fmt_double(r.median_dz) << "\n";
    out << r.variant << ",size," << fmt_double(r.median_dsize) << "\n";
    out << r.variant << ",iou," << fmt_double(r.median_diou) << "\n";
    out << r.variant << ",ldc_count," << r.ldc.count << "\n";
    out << r.variant << ",ldc_fraction," << fmt_double(r.ldc.fraction) << "\n";
    out << r.variant << ",diff_count," << r.diff.count << "\n";
    out << r.variant << ",diff_fraction," << fmt_double(r.diff.fraction) << "\n";
    out << r.variant << ",diff_lost," << r.diff.lost << "\n";
    out << r.variant << ",diff_gained," << r.diff.gained << "\n";
    out << r.variant << ",diff_net," << r.diff.net << "\n";
    out << r.variant << ",baseline_detected," << r.baseline_detected << "\n";
    out << r.variant << ",matched_records," << r.record_count << "\n";
  }
}

namespace
{

ordered_json report_to_json(const metrics::VariantReport & r)
{
  ordered_json j;
  j["variant"] = r.variant;
  j["medians"] = {{"x", r.median_dx},
                  {"y", r.median_dy},
                  {"z", r.median_dz},
                  {"size", r.median_dsize},
                  {"iou", r.median_diou}};
  j["ldc"] = {{"count", r.ldc.count}, {"fraction", r.ldc.fraction}};
  j["diff"] = {{"count", r.diff.count},
               {"fraction", r.diff.fraction},
               {"lost", r.diff.lost},
               {"gained", r.diff.gained},
               {"net", r.diff.net}};
  j["baseline_detected"] = r.baseline_detected;
  j["matched_records"] = r.record_count;
  return j;
}

}  // namespace

void write_report_json(
  const std::vector<metrics::VariantReport> & reports, const std::filesystem::path & path)
{
  ordered_json j;
  j["variants"] = ordered_json::array();
  for (const metrics::VariantReport & r : reports) {
    j["variants"].push_back(report_to_json(r));
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw IoError("write_report_json: cannot open " + path.string() + " for writing");
  }
  out << j.dump(2) << "\n";
}

std::vector<metrics::VariantReport> read_report_json(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw IoError("read_report_json: cannot open " + path.string());
  }
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception & e) {
    throw FormatError("read_report_json: " + path.string() + ": " + e.what());
  }
  std::vector<metrics::VariantReport> reports;
  try {
    for (const auto & rj : j.at("variants")) {
      metrics::VariantReport r;
      r.variant = rj.at("variant").get<std::string>();
      r.median_dx = rj.at("medians").at("x").get<double>();
      r.median_dy = rj.at("medians").at("y").get<double>();
      r.median_dz = rj.at("medians").at("z").get<double>();
      r.median_dsize = rj.at("medians").at("size").get<double>();
      r.median_diou = rj.at("medians").at("iou").get<double>();
      r.ldc.count = rj.at("ldc").at("count").get<std::size_t>();
      r.ldc.fraction = rj.at("ldc").at("fraction").get<double>();
      r.diff.count = rj.at("diff").at("count").get<std::size_t>();
      r.diff.fraction = rj.at("diff").at("fraction").get<double>();
      r.diff.lost = rj.at("diff").at("lost").get<std::size_t>();
      r.diff.gained = rj.at("diff").at("gained").get<std::size_t>();
      r.diff.net = rj.at("diff").at("net").get<long long>();
      r.baseline_detected = rj.at("baseline_detected").get<std::size_t>();
      r.record_count = rj.at("matched_records").get<std::size_t>();
      reports.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception & e) {
    throw SchemaError("read_report_json: " + path.string() + ": " + e.what());
  }
  return reports;
}

void write_plot_data_csv(
  const std::vector<metrics::DeviationRecord> & records, const std::filesystem::path & path)
{
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw IoError("write_plot_data_csv: cannot open " + path.string() + " for writing");
  }
  out << "x_deviation,y_deviation,iou_deviation,obstacle_range\n";
  for (const metrics::DeviationRecord & r : records) {
    out << fmt_double(r.dx_signed) << "," << fmt_double(r.dy_signed) << ","
        << fmt_double(r.diou_signed) << "," << fmt_double(r.gt_range) << "\n";
  }
}

std::vector<PlotDataRow> read_plot_data_csv(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw IoError("read_plot_data_csv: cannot open " + path.string());
  }
  std::string header;
  if (!std::getline(in, header)) {
    return {};
  }
  while (!header.empty() && (header.back() == '\r' || header.back() == ' ')) {
    header.pop_back();
  }
  if (header != "x_deviation,y_deviation,iou_deviation,obstacle_range") {
    throw FormatError(
      "read_plot_data_csv: " + path.string() + ": unexpected header '" + header + "'");
  }
  std::vector<PlotDataRow> rows;
  std::string line;
  int line_index = 1;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
      line.pop_back();
    }
    if (line.empty()) {
      ++line_index;
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> cells;
    while (std::getline(ss, cell, ',')) {
      try {
        cells.push_back(std::stod(cell));
      } catch (const std::exception &) {
        throw FormatError(
          "read_plot_data_csv: " + path.string() + ":" + std::to_string(line_index) +
          ": bad numeric cell '" + cell + "'");
      }
    }
    if (cells.size() != 4) {
      throw FormatError(
        "read_plot_data_csv: " + path.string() + ":" + std::to_string(line_index) +
        ": expected 4 cells");
    }
    rows.push_back({cells[0], cells[1], cells[2], cells[3]});
    ++line_index;
  }
  return rows;
}

cascade::CascadeTable cmd_cascade(
  const RunConfig & config, const std::filesystem::path & tracks_path,
  const std::filesystem::path & deviations_path, const std::vector<std::string> & pattern_names,
  double horizon, double dt)
{
  const std::vector<Track> tracks = pcd_io::read_tracks(tracks_path);
  const std::vector<PlotDataRow> rows = read_plot_data_csv(deviations_path);

  std::vector<cascade::XyDeviation> deviations;
  for (const PlotDataRow & r : rows) {
    if (r.obstacle_range <= config.range_filter) {
      deviations.push_back({r.x_deviation, r.y_deviation});
    }
  }
  if (deviations.empty()) {
    throw EmptyInput(
      "cmd_cascade: no deviations within " + std::to_string(config.range_filter) + " m");
  }

  std::vector<cascade::PerturbationPattern> patterns;
  for (const std::string & name : pattern_names) {
    cascade::PerturbationPattern p;
    p.kind = cascade::pattern_kind_from_string(name);
    patterns.push_back(p);
  }

  return cascade::run_cascade(
    tracks, cascade::build_stat_offsets(deviations), patterns,
    [](const Track & t, double h, double step) {
      return cascade::predict_constant_velocity(t, h, step);
    },
    horizon, dt);
}

void write_cascade_csv(const cascade::CascadeTable & table, const std::filesystem::path & path)
{
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw IoError("write_cascade_csv: cannot open " + path.string() + " for writing");
  }
  out << "stat,offset_x,offset_y";
  for (const std::string & name : table.pattern_names) {
    out << "," << name << "_ade_x," << name << "_fde_x," << name << "_ade_y," << name << "_fde_y";
  }
  out << ",exceeds_1m_margin\n";
  for (const cascade::CascadeRow & row : table.rows) {
    out << row.offset.label << "," << fmt_double(row.offset.dx) << ","
        << fmt_double(row.offset.dy);
    for (const cascade::DisplacementScores & s : row.per_pattern) {
      out << "," << fmt_double(s.ade_x) << "," << fmt_double(s.fde_x) << ","
          << fmt_double(s.ade_y) << "," << fmt_double(s.fde_y);
    }
    out << "," << (row.exceeds_1m_margin ? "true" : "false") << "\n";
  }
}

}  // namespace sorbet::pipeline
