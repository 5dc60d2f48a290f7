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

#ifndef SORBET__PIPELINE_HPP_
#define SORBET__PIPELINE_HPP_

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sorbet/cascade.hpp"
#include "sorbet/metrics.hpp"
#include "sorbet/mock_detector.hpp"
#include "sorbet/perturb.hpp"
#include "sorbet/types.hpp"

namespace sorbet::pipeline
{

/// Everything one run needs. Loaded from a JSON config file; thresholds
/// default to the standard KITTI-style values and are overridable there.
struct RunConfig
{
  std::filesystem::path dataset_root;  // expects velodyne/, label_2/, calib/
  std::filesystem::path output_root;
  perturb::SuiteConfig suite = perturb::SuiteConfig::default_suite(0);
  metrics::MatchThresholds thresholds;
  double ldc_threshold = 0.1;   // meters
  double range_filter = 10.0;   // meters, cascade extraction
  int parallelism = 1;
  mock_detector::MockDetectorConfig mock;
};

/// Environment variable consulted when the config omits dataset_root.
inline constexpr const char * kDatasetRootEnv = "SORBET_DATASET_ROOT";

RunConfig load_run_config(const std::filesystem::path & path);
RunConfig run_config_from_json_text(const std::string & text, const std::string & origin);

// ---------------------------------------------------------------------------
// Perturbation batch
// ---------------------------------------------------------------------------

struct FrameInputs
{
  PointCloud cloud;
  std::vector<GroundTruthLabel> labels;
  Calibration calib;
};

using FrameLoader = std::function<FrameInputs(const std::string & frame_id)>;

/// Loads velodyne/<id>.bin, label_2/<id>.txt and calib/<id>.txt.
FrameLoader dataset_frame_loader(const std::filesystem::path & dataset_root);

/// Frame ids present under dataset_root/velodyne, sorted.
std::vector<std::string> list_dataset_frames(const std::filesystem::path & dataset_root);

struct ManifestEntry
{
  std::string frame;
  std::string variant;
  std::uint64_t seed = 0;
  std::string kind;
  std::string distribution;  // empty when the kind takes none
  std::string direction;     // empty when the kind takes none
  double bound = 0.0;
  std::size_t moved = 0;
  std::size_t removed = 0;
  std::size_t added = 0;
  double max_shift = 0.0;
  std::string path;  // relative to output_root; empty for non-file sinks
};

struct FrameError
{
  std::string frame;
  std::string error_type;
  std::string message;
};

/// Where perturbed clouds go. write() is called from worker threads, one
/// call per (variant, frame); implementations must tolerate concurrency.
class PerturbSink
{
public:
  virtual ~PerturbSink() = default;

  /// Prior entry to reuse instead of recomputing, or nullopt.
  virtual std::optional<ManifestEntry> reusable(
    const std::string & variant, const std::string & frame)
  {
    (void)variant;
    (void)frame;
    return std::nullopt;
  }

  /// Stores the cloud, returning the path recorded in the manifest.
  virtual std::string write(
    const std::string & variant, const std::string & frame, const PointCloud & cloud) = 0;
};

/// Writes output_root/<variant>/<frame>.bin; resumes over a prior manifest.
class FileSink : public PerturbSink
{
public:
  FileSink(std::filesystem::path output_root, std::vector<ManifestEntry> prior_entries);

  std::optional<ManifestEntry> reusable(
    const std::string & variant, const std::string & frame) override;
  std::string write(
    const std::string & variant, const std::string & frame, const PointCloud & cloud) override;

private:
  std::filesystem::path output_root_;
  std::vector<ManifestEntry> prior_;
  std::map<std::string, std::size_t> prior_index_;  // "variant/frame" -> entry
};

struct BatchResult
{
  std::vector<ManifestEntry> entries;  // sorted by (frame, variant order)
  std::vector<FrameError> errors;      // sorted by frame
  std::size_t reused = 0;
};

/// Runs the suite over the frames with `parallelism` workers. Output bytes
/// and manifest entries are independent of the worker count. A failing
/// frame is reported and skipped; the batch continues.
BatchResult run_perturb_batch(
  const std::vector<std::string> & frame_ids, const FrameLoader & loader,
  const perturb::SuiteConfig & suite, int parallelism, PerturbSink & sink);

std::vector<ManifestEntry> load_manifest(const std::filesystem::path & path);
void write_manifest(
  const std::filesystem::path & path, const perturb::SuiteConfig & suite,
  const std::vector<ManifestEntry> & entries);

/// cmd: perturb the dataset to output_root and write the manifest.
BatchResult cmd_perturb(
  const RunConfig & config, const std::vector<std::string> & frames, bool resume = true);

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct VariantEvaluation
{
  metrics::VariantReport report;
  std::vector<metrics::DeviationRecord> records;
};

/// Compares one perturbed detection run against the baseline over every
/// frame in the baseline file. Throws FrameMismatch when the perturbed file
/// covers a different frame set.
VariantEvaluation evaluate_detections(
  const RunConfig & config, const std::string & variant_name,
  const std::vector<DetectionRecord> & baseline, const std::vector<DetectionRecord> & perturbed);

/// cmd: evaluate the baseline detections file against each perturbed file;
/// the variant name is the perturbed file stem. Writes report.csv,
/// report.json and plotdata_<variant>.csv under out_dir.
std::vector<VariantEvaluation> cmd_evaluate(
  const RunConfig & config, const std::filesystem::path & baseline_path,
  const std::vector<std::filesystem::path> & perturbed_paths,
  const std::filesystem::path & out_dir);

void write_report_csv(
  const std::vector<metrics::VariantReport> & reports, const std::filesystem::path & path);
void write_report_json(
  const std::vector<metrics::VariantReport> & reports, const std::filesystem::path & path);
std::vector<metrics::VariantReport> read_report_json(const std::filesystem::path & path);
void write_plot_data_csv(
  const std::vector<metrics::DeviationRecord> & records, const std::filesystem::path & path);

// ---------------------------------------------------------------------------
// Cascade
// ---------------------------------------------------------------------------

struct PlotDataRow
{
  double x_deviation = 0.0;
  double y_deviation = 0.0;
  double iou_deviation = 0.0;
  double obstacle_range = 0.0;
};

std::vector<PlotDataRow> read_plot_data_csv(const std::filesystem::path & path);

/// cmd: quartile extraction (with the 10 m range filter), stat offsets and
/// the pattern table, scored with the built-in constant-velocity predictor.
cascade::CascadeTable cmd_cascade(
  const RunConfig & config, const std::filesystem::path & tracks_path,
  const std::filesystem::path & deviations_path, const std::vector<std::string> & pattern_names,
  double horizon, double dt);

void write_cascade_csv(const cascade::CascadeTable & table, const std::filesystem::path & path);

}  // namespace sorbet::pipeline

#endif  // SORBET__PIPELINE_HPP_
