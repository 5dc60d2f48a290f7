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

#ifndef SORBET__CASCADE_HPP_
#define SORBET__CASCADE_HPP_

#include <functional>
#include <string>
#include <vector>

#include "sorbet/types.hpp"

namespace sorbet::cascade
{

/// How a detection deviation is folded into an obstacle's position history:
/// at a fixed frame interval, on every frame, or by replaying the previous
/// frame's position once.
struct PerturbationPattern
{
  enum class Kind { Interval, All, RemoveOnce };

  Kind kind = Kind::All;
  int interval = 3;  // Interval: one contaminated frame every `interval`
  int phase = 0;     // Interval alignment (sample index modulo interval)
  int frame = -1;    // RemoveOnce target sample; -1 means the last sample
  double dx = 0.0;   // Interval/All offset, meters
  double dy = 0.0;

  std::string kind_name() const;
};

PerturbationPattern::Kind pattern_kind_from_string(const std::string & s);

/// Applies the pattern; track length and timestamps are always preserved.
/// Throws PatternOutOfRange for a RemoveOnce frame without a predecessor
/// or outside the track, and for a non-positive interval.
Track apply_pattern(const Track & track, const PerturbationPattern & pattern);

struct PredictedTrajectory
{
  double horizon = 0.0;  // seconds
  std::vector<TrackSample> samples;
};

/// Built-in stand-in predictor: per-axis least-squares constant-velocity
/// fit over the last min(8, n) samples, extrapolated at step dt up to the
/// horizon. Throws InsufficientHistory below 2 samples.
PredictedTrajectory predict_constant_velocity(const Track & history, double horizon, double dt);

using Predictor = std::function<PredictedTrajectory(const Track &, double, double)>;

/// Per-axis displacement errors between two predictions on identical
/// timestamps: ade is the RMSE over samples, fde the absolute difference of
/// the final sample (the single-point RMSE).
struct DisplacementScores
{
  double ade_x = 0.0;
  double ade_y = 0.0;
  double fde_x = 0.0;
  double fde_y = 0.0;

  double max_value() const
  {
    return std::max(std::max(ade_x, ade_y), std::max(fde_x, fde_y));
  }
};

DisplacementScores displacement_scores(
  const PredictedTrajectory & baseline, const PredictedTrajectory & deviated);

/// One signed per-obstacle (x, y) deviation pair from the detection study.
struct XyDeviation
{
  double dx = 0.0;
  double dy = 0.0;
};

/// A table row's injected offset. Non-baseline rows take the observed
/// deviation pair closest to a quartile/fence/outlier statistic on one
/// axis, so x and y stay paired the way they co-occurred.
struct StatOffset
{
  std::string label;
  double dx = 0.0;
  double dy = 0.0;
  bool is_baseline = false;
};

/// Builds the row set: baseline plus, per axis, Q1/median/Q3, the Tukey
/// fences and (when outliers exist) outlier min/median/max. Throws
/// EmptyInput when no deviations are supplied.
std::vector<StatOffset> build_stat_offsets(const std::vector<XyDeviation> & deviations);

struct CascadeRow
{
  StatOffset offset;
  std::vector<DisplacementScores> per_pattern;  // parallel to the pattern list
  bool exceeds_1m_margin = false;
};

struct CascadeTable
{
  std::vector<std::string> pattern_names;
  std::vector<CascadeRow> rows;
};

/// Scores every (row, pattern) cell: the baseline prediction comes from the
/// clean track, the deviated one from the patterned track, and scores are
/// averaged over tracks. The baseline row applies no pattern and is zero by
/// construction.
CascadeTable run_cascade(
  const std::vector<Track> & tracks, const std::vector<StatOffset> & offsets,
  const std::vector<PerturbationPattern> & patterns, const Predictor & predictor, double horizon,
  double dt);

}  // namespace sorbet::cascade

#endif  // SORBET__CASCADE_HPP_
