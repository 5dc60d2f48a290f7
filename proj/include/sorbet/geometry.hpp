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

#ifndef SORBET__GEOMETRY_HPP_
#define SORBET__GEOMETRY_HPP_

#include <array>

#include "sorbet/types.hpp"

namespace sorbet::geometry
{

/// Maps any angle into (-pi, pi].
double normalize_yaw(double yaw);

/// Converts a KITTI camera-frame label box into a LiDAR-frame Box3D.
/// The label location is the bottom-face center (camera y points down);
/// the returned center is lifted by height/2 along LiDAR z. Throws
/// SingularTransform when rect_rotation * velo_to_cam cannot be inverted.
Box3D camera_box_to_lidar(const GroundTruthLabel & label, const Calibration & calib);

/// Maps a LiDAR-frame point into the rectified camera frame.
Eigen::Vector3d lidar_to_camera(const Eigen::Vector3d & p, const Calibration & calib);

/// Corner order: bottom face counter-clockwise seen from above, starting at
/// (+length/2, +width/2), then the top face in the same x/y order. The
/// centroid of the eight corners is the box center.
std::array<Eigen::Vector3d, 8> box_corners(const Box3D & box);

/// Indices of all points inside the (closed) box, sorted ascending.
/// Boundary points count as inside.
PointIndexSet points_in_box(const PointCloud & cloud, const Box3D & box);

/// Membership test for a single point, closed-box convention.
bool point_in_box(const Point & p, const Box3D & box);

/// Full 3D intersection-over-union: convex polygon clipping of the yaw-
/// rotated footprints times vertical overlap. Symmetric in its arguments
/// (bit-exact) and returns a value in [0, 1].
double iou_3d(const Box3D & a, const Box3D & b);

/// Area of the convex intersection of the two box footprints, in m^2.
double footprint_intersection_area(const Box3D & a, const Box3D & b);

}  // namespace sorbet::geometry

#endif  // SORBET__GEOMETRY_HPP_
