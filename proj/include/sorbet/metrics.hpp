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

#ifndef SORBET__METRICS_HPP_
#define SORBET__METRICS_HPP_

#include <string>
#include <vector>

#include "sorbet/types.hpp"

namespace sorbet::metrics
{

/// Detection-quality thresholds. An obstacle counts as detected when its
/// match IoU reaches 0.7 for cars or 0.5 for pedestrians and cyclists;
/// pairs below 0.25 are never matched at all.
struct MatchThresholds
{
  double match_iou = 0.25;
  double detect_iou_car = 0.7;
  double detect_iou_ped_cyc = 0.5;

  double detect_iou_for(ObjectClass c) const
  {
    return c == ObjectClass::Car ? detect_iou_car : detect_iou_ped_cyc;
  }
};

/// Ground truth obstacle already mapped into the LiDAR frame.
struct GtObject
{
  int gt_id = 0;
  ObjectClass object_class = ObjectClass::Misc;
  Box3D box;
};

struct MatchedDetection
{
  int gt_id = 0;
  Box3D box;  // the matched detection's box
  double iou_with_gt = 0.0;
  bool detected = false;
  double score = 0.0;
  double gt_range = 0.0;  // planar range of the ground-truth center
};

/// Greedy one-to-one assignment in descending IoU order; pairs under
/// thresholds.match_iou are discarded. Ties break on higher detection
/// score, then lower gt_id, then detection index. DontCare ground truth
/// never participates. Output sorted by gt_id.
std::vector<MatchedDetection> match_to_ground_truth(
  const std::vector<GtObject> & gts, const std::vector<DetectionRecord> & dets,
  const MatchThresholds & thresholds);

/// Per-obstacle deltas between a baseline and a perturbed detection run.
/// dx/dy/dz/dsize/diou are absolute; the signed center and IoU deltas plus
/// the obstacle range are kept for the deviation-scatter export and the
/// trajectory cascade.
struct DeviationRecord
{
  int gt_id = 0;
  double dx = 0.0;
  double dy = 0.0;
  double dz = 0.0;
  double dsize = 0.0;  // cubic meters
  double diou = 0.0;
  double dx_signed = 0.0;
  double dy_signed = 0.0;
  double diou_signed = 0.0;
  double gt_range = 0.0;

  double max_axis_deviation() const { return std::max(dx, std::max(dy, dz)); }
};

/// One record per gt_id matched in both runs; obstacles matched in only
/// one run are DIFF material, not deviation records.
std::vector<DeviationRecord> compute_deviations(
  const std::vector<MatchedDetection> & baseline, const std::vector<MatchedDetection> & perturbed);

struct CountWithFraction
{
  std::size_t count = 0;
  double fraction = 0.0;
};

/// Records whose largest per-axis center deviation strictly exceeds the
/// threshold (0.1 m by default).
CountWithFraction large_deviation_count(
  const std::vector<DeviationRecord> & records, double threshold = 0.1);

enum class DeviationField { X, Y, Z, Size, Iou };

/// Median of a field over the large-deviation subset; 0 when that subset
/// is empty. Even counts use the mean of the two middle values.
double median_of_large(
  const std::vector<DeviationRecord> & records, DeviationField field, double threshold = 0.1);

struct DiffResult
{
  std::size_t count = 0;    // |baseline detected - perturbed detected|
  double fraction = 0.0;    // count over baseline detected
  std::size_t lost = 0;     // detected in baseline only
  std::size_t gained = 0;   // detected in perturbed only
  long long net = 0;        // baseline detected - perturbed detected, signed
};

DiffResult count_diff(
  const std::vector<MatchedDetection> & baseline, const std::vector<MatchedDetection> & perturbed);

/// Box-plot statistics with Tukey fences: uf = q3 + 1.5 * iqr,
/// lf = q1 - 1.5 * iqr. Quantiles use linear interpolation between closest
/// ranks. Throws EmptyInput on an empty sequence.
struct DeviationQuartiles
{
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
  double uf = 0.0;
  double lf = 0.0;
  std::size_t outlier_count = 0;  // values strictly outside [lf, uf]
  double outlier_min = 0.0;       // 0 when there are no outliers
  double outlier_max = 0.0;
  double outlier_median = 0.0;
};

DeviationQuartiles deviation_quartiles(std::vector<double> values);

/// Linear-interpolation quantile of an already sorted sequence, p in [0,1].
double sorted_quantile(const std::vector<double> & sorted_values, double p);

/// Keeps records whose ground-truth obstacle lies within max_range meters
/// (planar) of the sensor; the cascade study uses 10 m.
std::vector<DeviationRecord> filter_by_range(
  const std::vector<DeviationRecord> & records, double max_range);

/// Frame/dataset aggregate for one perturbation variant.
struct VariantReport
{
  std::string variant;
  std::size_t record_count = 0;  // obstacles matched in both runs
  double median_dx = 0.0;
  double median_dy = 0.0;
  double median_dz = 0.0;
  double median_dsize = 0.0;
  double median_diou = 0.0;
  CountWithFraction ldc;
  DiffResult diff;
  std::size_t baseline_detected = 0;
};

/// Accumulates per-frame match results into one VariantReport. DIFF counts
/// aggregate per frame; LDC and the medians run over the pooled records.
class ReportAccumulator
{
public:
  explicit ReportAccumulator(double ldc_threshold = 0.1) : ldc_threshold_(ldc_threshold) {}

  void add_frame(
    const std::vector<MatchedDetection> & baseline,
    const std::vector<MatchedDetection> & perturbed);

  VariantReport finalize(const std::string & variant) const;
  const std::vector<DeviationRecord> & records() const { return records_; }

private:
  double ldc_threshold_;
  std::vector<DeviationRecord> records_;
  std::size_t baseline_detected_ = 0;
  std::size_t perturbed_detected_ = 0;
  std::size_t lost_ = 0;
  std::size_t gained_ = 0;
};

}  // namespace sorbet::metrics

#endif  // SORBET__METRICS_HPP_
