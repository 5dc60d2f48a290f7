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

#ifndef SORBET__TYPES_HPP_
#define SORBET__TYPES_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace sorbet
{

enum class ObjectClass { Car, Pedestrian, Cyclist, Misc, DontCare };

std::string to_string(ObjectClass c);
ObjectClass object_class_from_string(const std::string & s);

/// One LiDAR return: position in meters (sensor frame) plus reflectance in
/// [0, 1]. Stored as float32 to match the 16-byte wire record exactly.
struct Point
{
  float x = 0.f;
  float y = 0.f;
  float z = 0.f;
  float intensity = 0.f;
};

inline bool operator==(const Point & a, const Point & b)
{
  return a.x == b.x && a.y == b.y && a.z == b.z && a.intensity == b.intensity;
}

/// A full LiDAR sweep. Point order is significant and preserved by all I/O.
struct PointCloud
{
  std::vector<Point> points;
  std::string frame_id;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Oriented 3D bounding box in the LiDAR frame: center, dimensions
/// (length along the box x axis, width along y, height along z) and a yaw
/// rotation about vertical. Yaw is kept normalized to (-pi, pi].
struct Box3D
{
  double cx = 0.0;
  double cy = 0.0;
  double cz = 0.0;
  double length = 0.0;
  double width = 0.0;
  double height = 0.0;
  double yaw = 0.0;

  double volume() const { return length * width * height; }
  /// Planar distance of the center from the sensor origin.
  double range_xy() const { return std::hypot(cx, cy); }
  bool valid_dims() const { return length > 0.0 && width > 0.0 && height > 0.0; }
};

/// Sorted, duplicate-free indices into an associated PointCloud.
struct PointIndexSet
{
  std::vector<std::size_t> indices;

  std::size_t size() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
  bool contains(std::size_t i) const;
  /// Sorts and deduplicates; call after bulk insertion.
  void normalize();
};

/// KITTI-style sensor calibration: camera projection P2, rectifying rotation
/// R0_rect and the rigid velodyne-to-camera transform.
struct Calibration
{
  Eigen::Matrix<double, 3, 4> cam_projection = Eigen::Matrix<double, 3, 4>::Zero();
  Eigen::Matrix3d rect_rotation = Eigen::Matrix3d::Identity();
  Eigen::Matrix<double, 3, 4> velo_to_cam = Eigen::Matrix<double, 3, 4>::Zero();
};

/// One line of a KITTI object label. The box lives in camera coordinates
/// (location is the bottom-face center, y points down, rotation about
/// camera y); geometry::camera_box_to_lidar converts it.
struct GroundTruthLabel
{
  int gt_id = 0;  // zero-based line index within the frame's label file
  ObjectClass object_class = ObjectClass::Misc;
  double truncation = 0.0;
  int occlusion = 0;
  double alpha = 0.0;
  double bbox2d[4] = {0.0, 0.0, 0.0, 0.0};  // left, top, right, bottom (pixels)
  double height = 0.0;                      // h, w, l in meters
  double width = 0.0;
  double length = 0.0;
  double location[3] = {0.0, 0.0, 0.0};  // camera frame, meters
  double rotation_y = 0.0;               // radians
};

/// Externally supplied detector output for one obstacle in one frame.
struct DetectionRecord
{
  std::string frame_id;
  Box3D box;
  ObjectClass object_class = ObjectClass::Misc;
  double score = 0.0;
};

/// Planar position history of one obstacle, timestamps strictly increasing.
struct TrackSample
{
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
};

struct Track
{
  std::int64_t obstacle_id = 0;
  std::vector<TrackSample> samples;
  ObjectClass object_class = ObjectClass::Misc;

  std::size_t size() const { return samples.size(); }
};

}  // namespace sorbet

#endif  // SORBET__TYPES_HPP_
