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

#include "sorbet/mock_detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sorbet/geometry.hpp"

namespace sorbet::mock_detector
{

std::vector<DetectionRecord> detect(
  const PointCloud & cloud, const std::vector<metrics::GtObject> & gts,
  const MockDetectorConfig & config)
{
  std::vector<DetectionRecord> detections;
  for (const metrics::GtObject & gt : gts) {
    if (gt.object_class == ObjectClass::DontCare) {
      continue;
    }
    const PointIndexSet members = geometry::points_in_box(cloud, gt.box);
    if (members.size() < config.min_points) {
      continue;
    }

    const double c = std::cos(gt.box.yaw);
    const double s = std::sin(gt.box.yaw);
    double min_l = std::numeric_limits<double>::infinity();
    double max_l = -std::numeric_limits<double>::infinity();
    double min_w = std::numeric_limits<double>::infinity();
    double max_w = -std::numeric_limits<double>::infinity();
    double min_z = std::numeric_limits<double>::infinity();
    double max_z = -std::numeric_limits<double>::infinity();
    for (std::size_t i : members.indices) {
      const Point & p = cloud.points[i];
      const double dx = static_cast<double>(p.x) - gt.box.cx;
      const double dy = static_cast<double>(p.y) - gt.box.cy;
      const double lx = c * dx + s * dy;
      const double ly = -s * dx + c * dy;
      min_l = std::min(min_l, lx);
      max_l = std::max(max_l, lx);
      min_w = std::min(min_w, ly);
      max_w = std::max(max_w, ly);
      min_z = std::min(min_z, static_cast<double>(p.z));
      max_z = std::max(max_z, static_cast<double>(p.z));
    }

    const double mid_l = 0.5 * (min_l + max_l);
    const double mid_w = 0.5 * (min_w + max_w);
    DetectionRecord det;
    det.frame_id = cloud.frame_id;
    det.object_class = gt.object_class;
    det.box.cx = gt.box.cx + c * mid_l - s * mid_w;
    det.box.cy = gt.box.cy + s * mid_l + c * mid_w;
    det.box.cz = 0.5 * (min_z + max_z);
    det.box.length = std::max(max_l - min_l, config.min_extent);
    det.box.width = std::max(max_w - min_w, config.min_extent);
    det.box.height = std::max(max_z - min_z, config.min_extent);
    det.box.yaw = gt.box.yaw;
    det.score = std::min(1.0, static_cast<double>(members.size()) / config.score_scale);
    detections.push_back(det);
  }
  return detections;
}

}  // namespace sorbet::mock_detector
