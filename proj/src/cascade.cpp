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

#include "sorbet/cascade.hpp"

#include <algorithm>
#include <cmath>

#include "sorbet/errors.hpp"
#include "sorbet/metrics.hpp"

namespace sorbet::cascade
{

namespace
{

constexpr std::size_t kFitWindow = 8;  // frames feeding the velocity fit
constexpr double kLaneMarginMeters = 1.0;

// Deviation pair whose value on the chosen axis is closest to `target`.
XyDeviation nearest_on_axis(
  const std::vector<XyDeviation> & deviations, bool axis_x, double target)
{
  XyDeviation best = deviations.front();
  double best_gap = std::abs((axis_x ? best.dx : best.dy) - target);
  for (const XyDeviation & d : deviations) {
    const double gap = std::abs((axis_x ? d.dx : d.dy) - target);
    if (gap < best_gap) {
      best_gap = gap;
      best = d;
    }
  }
  return best;
}

}  // namespace

std::string PerturbationPattern::kind_name() const
{
  switch (kind) {
    case Kind::Interval:
      return "interval";
    case Kind::All:
      return "all";
    case Kind::RemoveOnce:
      return "remove_once";
  }
  return "unknown";
}

PerturbationPattern::Kind pattern_kind_from_string(const std::string & s)
{
  if (s == "interval") {
    return PerturbationPattern::Kind::Interval;
  }
  if (s == "all") {
    return PerturbationPattern::Kind::All;
  }
  if (s == "remove_once" || s == "remove-once") {
    return PerturbationPattern::Kind::RemoveOnce;
  }
  throw ValidationError("unknown pattern kind '" + s + "'");
}

Track apply_pattern(const Track & track, const PerturbationPattern & pattern)
{
  Track out = track;
  switch (pattern.kind) {
    case PerturbationPattern::Kind::All:
      for (TrackSample & s : out.samples) {
        s.x += pattern.dx;
        s.y += pattern.dy;
      }
      break;
    case PerturbationPattern::Kind::Interval: {
      if (pattern.interval < 1 || pattern.phase < 0) {
        throw PatternOutOfRange("interval pattern requires interval >= 1 and phase >= 0");
      }
      const int k = pattern.interval;
      const int phase = pattern.phase % k;
      for (std::size_t i = 0; i < out.samples.size(); ++i) {
        if (static_cast<int>(i % static_cast<std::size_t>(k)) == phase) {
          out.samples[i].x += pattern.dx;
          out.samples[i].y += pattern.dy;
        }
      }
      break;
    }
    case PerturbationPattern::Kind::RemoveOnce: {
      const auto n = static_cast<long long>(out.samples.size());
      const long long frame = pattern.frame < 0 ? n - 1 : pattern.frame;
      if (frame < 1 || frame >= n) {
        throw PatternOutOfRange(
          "remove_once frame " + std::to_string(frame) + " has no predecessor in a track of " +
          std::to_string(n) + " samples");
      }
      out.samples[frame].x = out.samples[frame - 1].x;
      out.samples[frame].y = out.samples[frame - 1].y;
      break;
    }
  }
  return out;
}

PredictedTrajectory predict_constant_velocity(const Track & history, double horizon, double dt)
{
  const std::size_t n = history.samples.size();
  if (n < 2) {
    throw InsufficientHistory(
      "predict_constant_velocity needs >= 2 samples, got " + std::to_string(n));
  }
  if (!(dt > 0.0) || !(horizon > 0.0)) {
    throw ValidationError("predict_constant_velocity: horizon and dt must be > 0");
  }
  const auto steps = static_cast<std::size_t>(std::floor(horizon / dt + 1e-9));
  if (steps == 0) {
    throw ValidationError("predict_constant_velocity: horizon shorter than dt");
  }

  const std::size_t window = std::min(kFitWindow, n);
  const std::size_t first = n - window;

  double mean_t = 0.0;
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (std::size_t i = first; i < n; ++i) {
    mean_t += history.samples[i].t;
    mean_x += history.samples[i].x;
    mean_y += history.samples[i].y;
  }
  mean_t /= static_cast<double>(window);
  mean_x /= static_cast<double>(window);
  mean_y /= static_cast<double>(window);

  double var_t = 0.0;
  double cov_tx = 0.0;
  double cov_ty = 0.0;
  for (std::size_t i = first; i < n; ++i) {
    const double dt_i = history.samples[i].t - mean_t;
    var_t += dt_i * dt_i;
    cov_tx += dt_i * (history.samples[i].x - mean_x);
    cov_ty += dt_i * (history.samples[i].y - mean_y);
  }
  // Timestamps strictly increase, so var_t > 0 whenever window >= 2.
  const double vx = cov_tx / var_t;
  const double vy = cov_ty / var_t;
  const double ax = mean_x - vx * mean_t;
  const double ay = mean_y - vy * mean_t;

  PredictedTrajectory pred;
  pred.horizon = horizon;
  pred.samples.reserve(steps);
  const double t_last = history.samples.back().t;
  for (std::size_t i = 1; i <= steps; ++i) {
    const double t = t_last + static_cast<double>(i) * dt;
    pred.samples.push_back({t, ax + vx * t, ay + vy * t});
  }
  return pred;
}

DisplacementScores displacement_scores(
  const PredictedTrajectory & baseline, const PredictedTrajectory & deviated)
{
  if (baseline.samples.size() != deviated.samples.size()) {
    throw LengthMismatch(
      "displacement_scores: " + std::to_string(baseline.samples.size()) + " vs " +
      std::to_string(deviated.samples.size()) + " samples");
  }
  if (baseline.samples.empty()) {
    throw LengthMismatch("displacement_scores: empty trajectories");
  }
  double sq_x = 0.0;
  double sq_y = 0.0;
  for (std::size_t i = 0; i < baseline.samples.size(); ++i) {
    if (baseline.samples[i].t != deviated.samples[i].t) {
      throw LengthMismatch("displacement_scores: timestamps do not match");
    }
    const double ex = deviated.samples[i].x - baseline.samples[i].x;
    const double ey = deviated.samples[i].y - baseline.samples[i].y;
    sq_x += ex * ex;
    sq_y += ey * ey;
  }
  const auto n = static_cast<double>(baseline.samples.size());
  DisplacementScores s;
  s.ade_x = std::sqrt(sq_x / n);
  s.ade_y = std::sqrt(sq_y / n);
  s.fde_x = std::abs(deviated.samples.back().x - baseline.samples.back().x);
  s.fde_y = std::abs(deviated.samples.back().y - baseline.samples.back().y);
  return s;
}

std::vector<StatOffset> build_stat_offsets(const std::vector<XyDeviation> & deviations)
{
  if (deviations.empty()) {
    throw EmptyInput("build_stat_offsets: no deviations");
  }
  std::vector<double> xs;
  std::vector<double> ys;
  xs.reserve(deviations.size());
  ys.reserve(deviations.size());
  for (const XyDeviation & d : deviations) {
    xs.push_back(d.dx);
    ys.push_back(d.dy);
  }
  const metrics::DeviationQuartiles qx = metrics::deviation_quartiles(xs);
  const metrics::DeviationQuartiles qy = metrics::deviation_quartiles(ys);

  std::vector<StatOffset> rows;
  rows.push_back({"baseline", 0.0, 0.0, true});

  auto add_axis = [&](const char * axis, bool is_x, const metrics::DeviationQuartiles & q) {
    auto add = [&](const std::string & stat, double target) {
      const XyDeviation pair = nearest_on_axis(deviations, is_x, target);
      rows.push_back({std::string(axis) + "_" + stat, pair.dx, pair.dy, false});
    };
    add("q1", q.q1);
    add("median", q.median);
    add("q3", q.q3);
    add("uf", q.uf);
    add("lf", q.lf);
    if (q.outlier_count > 0) {
      add("outlier_min", q.outlier_min);
      add("outlier_median", q.outlier_median);
      add("outlier_max", q.outlier_max);
    }
  };
  add_axis("x", true, qx);
  add_axis("y", false, qy);
  return rows;
}

CascadeTable run_cascade(
  const std::vector<Track> & tracks, const std::vector<StatOffset> & offsets,
  const std::vector<PerturbationPattern> & patterns, const Predictor & predictor, double horizon,
  double dt)
{
  if (tracks.empty()) {
    throw EmptyInput("run_cascade: no tracks");
  }

  std::vector<PredictedTrajectory> baseline_preds;
  baseline_preds.reserve(tracks.size());
  for (const Track & track : tracks) {
    baseline_preds.push_back(predictor(track, horizon, dt));
  }

  CascadeTable table;
  for (const PerturbationPattern & p : patterns) {
    table.pattern_names.push_back(p.kind_name());
  }

  for (const StatOffset & offset : offsets) {
    CascadeRow row;
    row.offset = offset;
    for (const PerturbationPattern & pattern : patterns) {
      DisplacementScores sum;
      for (std::size_t ti = 0; ti < tracks.size(); ++ti) {
        PredictedTrajectory deviated_pred;
        if (offset.is_baseline) {
          deviated_pred = predictor(tracks[ti], horizon, dt);
        } else {
          PerturbationPattern instance = pattern;
          instance.dx = offset.dx;
          instance.dy = offset.dy;
          deviated_pred = predictor(apply_pattern(tracks[ti], instance), horizon, dt);
        }
        const DisplacementScores s = displacement_scores(baseline_preds[ti], deviated_pred);
        sum.ade_x += s.ade_x;
        sum.ade_y += s.ade_y;
        sum.fde_x += s.fde_x;
        sum.fde_y += s.fde_y;
      }
      const auto n = static_cast<double>(tracks.size());
      row.per_pattern.push_back({sum.ade_x / n, sum.ade_y / n, sum.fde_x / n, sum.fde_y / n});
    }
    for (const DisplacementScores & s : row.per_pattern) {
      row.exceeds_1m_margin = row.exceeds_1m_margin || s.max_value() > kLaneMarginMeters;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace sorbet::cascade
