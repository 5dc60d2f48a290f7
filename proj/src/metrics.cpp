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

#include "sorbet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "sorbet/errors.hpp"
#include "sorbet/geometry.hpp"

namespace sorbet::metrics
{

namespace
{

double field_value(const DeviationRecord & r, DeviationField field)
{
  switch (field) {
    case DeviationField::X:
      return r.dx;
    case DeviationField::Y:
      return r.dy;
    case DeviationField::Z:
      return r.dz;
    case DeviationField::Size:
      return r.dsize;
    case DeviationField::Iou:
      return r.diou;
  }
  return 0.0;
}

double median_sorted(const std::vector<double> & sorted)
{
  const std::size_t n = sorted.size();
  if (n == 0) {
    return 0.0;
  }
  if (n % 2 == 1) {
    return sorted[n / 2];
  }
  return 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

std::size_t count_detected(const std::vector<MatchedDetection> & matches)
{
  std::size_t n = 0;
  for (const MatchedDetection & m : matches) {
    n += m.detected ? 1 : 0;
  }
  return n;
}

}  // namespace

std::vector<MatchedDetection> match_to_ground_truth(
  const std::vector<GtObject> & gts, const std::vector<DetectionRecord> & dets,
  const MatchThresholds & thresholds)
{
  struct Candidate
  {
    double iou;
    double score;
    std::size_t gt_idx;
    std::size_t det_idx;
  };

  std::vector<Candidate> candidates;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (gts[g].object_class == ObjectClass::DontCare) {
      continue;
    }
    for (std::size_t d = 0; d < dets.size(); ++d) {
      const double iou = geometry::iou_3d(gts[g].box, dets[d].box);
      if (iou >= thresholds.match_iou) {
        candidates.push_back({iou, dets[d].score, g, d});
      }
    }
  }

  std::sort(candidates.begin(), candidates.end(), [&](const Candidate & a, const Candidate & b) {
    if (a.iou != b.iou) {
      return a.iou > b.iou;
    }
    if (a.score != b.score) {
      return a.score > b.score;
    }
    if (gts[a.gt_idx].gt_id != gts[b.gt_idx].gt_id) {
      return gts[a.gt_idx].gt_id < gts[b.gt_idx].gt_id;
    }
    return a.det_idx < b.det_idx;
  });

  std::vector<bool> gt_used(gts.size(), false);
  std::vector<bool> det_used(dets.size(), false);
  std::vector<MatchedDetection> matches;
  for (const Candidate & c : candidates) {
    if (gt_used[c.gt_idx] || det_used[c.det_idx]) {
      continue;
    }
    gt_used[c.gt_idx] = true;
    det_used[c.det_idx] = true;
    const GtObject & gt = gts[c.gt_idx];
    MatchedDetection m;
    m.gt_id = gt.gt_id;
    m.box = dets[c.det_idx].box;
    m.iou_with_gt = c.iou;
    m.detected = c.iou >= thresholds.detect_iou_for(gt.object_class);
    m.score = c.score;
    m.gt_range = gt.box.range_xy();
    matches.push_back(m);
  }
  std::sort(matches.begin(), matches.end(), [](const MatchedDetection & a, const MatchedDetection & b) {
    return a.gt_id < b.gt_id;
  });
  return matches;
}

std::vector<DeviationRecord> compute_deviations(
  const std::vector<MatchedDetection> & baseline, const std::vector<MatchedDetection> & perturbed)
{
  std::map<int, const MatchedDetection *> by_id;
  for (const MatchedDetection & m : perturbed) {
    by_id[m.gt_id] = &m;
  }

  std::vector<DeviationRecord> records;
  for (const MatchedDetection & base : baseline) {
    auto it = by_id.find(base.gt_id);
    if (it == by_id.end()) {
      continue;
    }
    const MatchedDetection & pert = *it->second;
    DeviationRecord r;
    r.gt_id = base.gt_id;
    r.dx_signed = pert.box.cx - base.box.cx;
    r.dy_signed = pert.box.cy - base.box.cy;
    r.diou_signed = pert.iou_with_gt - base.iou_with_gt;
    r.dx = std::abs(r.dx_signed);
    r.dy = std::abs(r.dy_signed);
    r.dz = std::abs(pert.box.cz - base.box.cz);
    r.dsize = std::abs(pert.box.volume() - base.box.volume());
    r.diou = std::abs(r.diou_signed);
    r.gt_range = base.gt_range;
    records.push_back(r);
  }
  return records;
}

CountWithFraction large_deviation_count(
  const std::vector<DeviationRecord> & records, double threshold)
{
  CountWithFraction out;
  for (const DeviationRecord & r : records) {
    if (r.max_axis_deviation() > threshold) {
      ++out.count;
    }
  }
  out.fraction =
    records.empty() ? 0.0 : static_cast<double>(out.count) / static_cast<double>(records.size());
  return out;
}

double median_of_large(
  const std::vector<DeviationRecord> & records, DeviationField field, double threshold)
{
  std::vector<double> values;
  for (const DeviationRecord & r : records) {
    if (r.max_axis_deviation() > threshold) {
      values.push_back(field_value(r, field));
    }
  }
  std::sort(values.begin(), values.end());
  return median_sorted(values);
}

DiffResult count_diff(
  const std::vector<MatchedDetection> & baseline, const std::vector<MatchedDetection> & perturbed)
{
  std::map<int, bool> base_detected;
  for (const MatchedDetection & m : baseline) {
    if (m.detected) {
      base_detected[m.gt_id] = true;
    }
  }
  std::map<int, bool> pert_detected;
  for (const MatchedDetection & m : perturbed) {
    if (m.detected) {
      pert_detected[m.gt_id] = true;
    }
  }

  DiffResult diff;
  for (const auto & [id, _] : base_detected) {
    if (pert_detected.find(id) == pert_detected.end()) {
      ++diff.lost;
    }
  }
  for (const auto & [id, _] : pert_detected) {
    if (base_detected.find(id) == base_detected.end()) {
      ++diff.gained;
    }
  }
  diff.net = static_cast<long long>(base_detected.size()) -
             static_cast<long long>(pert_detected.size());
  diff.count = static_cast<std::size_t>(std::llabs(diff.net));
  diff.fraction = base_detected.empty()
                    ? 0.0
                    : static_cast<double>(diff.count) / static_cast<double>(base_detected.size());
  return diff;
}

double sorted_quantile(const std::vector<double> & sorted_values, double p)
{
  if (sorted_values.empty()) {
    throw EmptyInput("sorted_quantile: empty input");
  }
  const std::size_t n = sorted_values.size();
  if (n == 1) {
    return sorted_values[0];
  }
  const double h = p * static_cast<double>(n - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted_values[lo] + frac * (sorted_values[hi] - sorted_values[lo]);
}

DeviationQuartiles deviation_quartiles(std::vector<double> values)
{
  if (values.empty()) {
    throw EmptyInput("deviation_quartiles: empty input");
  }
  std::sort(values.begin(), values.end());

  DeviationQuartiles q;
  q.q1 = sorted_quantile(values, 0.25);
  q.median = sorted_quantile(values, 0.50);
  q.q3 = sorted_quantile(values, 0.75);
  q.iqr = q.q3 - q.q1;
  q.uf = q.q3 + 1.5 * q.iqr;
  q.lf = q.q1 - 1.5 * q.iqr;

  std::vector<double> outliers;
  for (double v : values) {
    if (v < q.lf || v > q.uf) {
      outliers.push_back(v);
    }
  }
  q.outlier_count = outliers.size();
  if (!outliers.empty()) {
    q.outlier_min = outliers.front();
    q.outlier_max = outliers.back();
    q.outlier_median = median_sorted(outliers);
  }
  return q;
}

std::vector<DeviationRecord> filter_by_range(
  const std::vector<DeviationRecord> & records, double max_range)
{
  std::vector<DeviationRecord> kept;
  for (const DeviationRecord & r : records) {
    if (r.gt_range <= max_range) {
      kept.push_back(r);
    }
  }
  return kept;
}

void ReportAccumulator::add_frame(
  const std::vector<MatchedDetection> & baseline, const std::vector<MatchedDetection> & perturbed)
{
  const std::vector<DeviationRecord> frame_records = compute_deviations(baseline, perturbed);
  records_.insert(records_.end(), frame_records.begin(), frame_records.end());

  const DiffResult frame_diff = count_diff(baseline, perturbed);
  lost_ += frame_diff.lost;
  gained_ += frame_diff.gained;
  baseline_detected_ += count_detected(baseline);
  perturbed_detected_ += count_detected(perturbed);
}

VariantReport ReportAccumulator::finalize(const std::string & variant) const
{
  VariantReport report;
  report.variant = variant;
  report.record_count = records_.size();
  report.median_dx = median_of_large(records_, DeviationField::X, ldc_threshold_);
  report.median_dy = median_of_large(records_, DeviationField::Y, ldc_threshold_);
  report.median_dz = median_of_large(records_, DeviationField::Z, ldc_threshold_);
  report.median_dsize = median_of_large(records_, DeviationField::Size, ldc_threshold_);
  report.median_diou = median_of_large(records_, DeviationField::Iou, ldc_threshold_);
  report.ldc = large_deviation_count(records_, ldc_threshold_);
  report.baseline_detected = baseline_detected_;

  report.diff.lost = lost_;
  report.diff.gained = gained_;
  report.diff.net = static_cast<long long>(baseline_detected_) -
                    static_cast<long long>(perturbed_detected_);
  report.diff.count = static_cast<std::size_t>(std::llabs(report.diff.net));
  report.diff.fraction = baseline_detected_ == 0 ? 0.0
                                                 : static_cast<double>(report.diff.count) /
                                                     static_cast<double>(baseline_detected_);
  return report;
}

}  // namespace sorbet::metrics
