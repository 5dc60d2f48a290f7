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

#ifndef SORBET__MOCK_DETECTOR_HPP_
#define SORBET__MOCK_DETECTOR_HPP_

#include <vector>

#include "sorbet/metrics.hpp"
#include "sorbet/types.hpp"

namespace sorbet::mock_detector
{

struct MockDetectorConfig
{
  std::size_t min_points = 20;  // detections with fewer supporting points are dropped
  double min_extent = 0.05;     // meters; floor for degenerate fitted dims
  double score_scale = 50.0;    // score = min(1, points / score_scale)
};

/// Deterministic stand-in for an external DNN detector: fits an oriented
/// box (ground-truth yaw, extents from the points inside the ground-truth
/// box) and drops obstacles whose in-box point count falls under the floor.
/// Point motion, removal and addition all shift its output, which is what
/// the evaluation pipeline needs from a detector.
std::vector<DetectionRecord> detect(
  const PointCloud & cloud, const std::vector<metrics::GtObject> & gts,
  const MockDetectorConfig & config);

}  // namespace sorbet::mock_detector

#endif  // SORBET__MOCK_DETECTOR_HPP_
