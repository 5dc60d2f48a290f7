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

#include "sorbet/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "sorbet/errors.hpp"

namespace sorbet::geometry
{

namespace
{

// Polygon intersections thinner than this are treated as empty; guards
// collinear-edge degeneracies in the clipper.
constexpr double kAreaEpsilon = 1e-12;

struct Vec2
{
  double x;
  double y;
};

// Footprint corners, counter-clockwise. Same x/y order as box_corners.
std::array<Vec2, 4> footprint(const Box3D & box)
{
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double hl = 0.5 * box.length;
  const double hw = 0.5 * box.width;
  const double lx[4] = {hl, -hl, -hl, hl};
  const double ly[4] = {hw, hw, -hw, -hw};
  std::array<Vec2, 4> out;
  for (int i = 0; i < 4; ++i) {
    out[i] = {box.cx + c * lx[i] - s * ly[i], box.cy + s * lx[i] + c * ly[i]};
  }
  return out;
}

double shoelace_area(const std::vector<Vec2> & poly)
{
  const std::size_t n = poly.size();
  if (n < 3) {
    return 0.0;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 & p = poly[i];
    const Vec2 & q = poly[(i + 1) % n];
    acc += p.x * q.y - q.x * p.y;
  }
  return 0.5 * std::abs(acc);
}

// Sutherland-Hodgman clip of a convex subject polygon by one half-plane.
// Inside means cross((b - a), (p - a)) >= 0 for the CCW clip edge (a, b).
void clip_half_plane(std::vector<Vec2> & subject, const Vec2 & a, const Vec2 & b)
{
  std::vector<Vec2> out;
  out.reserve(subject.size() + 1);
  const double ex = b.x - a.x;
  const double ey = b.y - a.y;
  const std::size_t n = subject.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 & cur = subject[i];
    const Vec2 & nxt = subject[(i + 1) % n];
    const double dc = ex * (cur.y - a.y) - ey * (cur.x - a.x);
    const double dn = ex * (nxt.y - a.y) - ey * (nxt.x - a.x);
    const bool cur_in = dc >= 0.0;
    const bool nxt_in = dn >= 0.0;
    if (cur_in) {
      out.push_back(cur);
    }
    if (cur_in != nxt_in) {
      const double t = dc / (dc - dn);
      out.push_back({cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)});
    }
  }
  subject = std::move(out);
}

double convex_intersection_area(const std::array<Vec2, 4> & pa, const std::array<Vec2, 4> & pb)
{
  std::vector<Vec2> poly(pa.begin(), pa.end());
  for (int i = 0; i < 4 && !poly.empty(); ++i) {
    clip_half_plane(poly, pb[i], pb[(i + 1) % 4]);
  }
  const double area = shoelace_area(poly);
  return area <= kAreaEpsilon ? 0.0 : area;
}

// Volume through the same footprint-area and z-span arithmetic used for
// intersections, so iou_3d(a, a) reduces to exactly 1.
double box_volume_via_footprint(const Box3D & box)
{
  const auto fp = footprint(box);
  std::vector<Vec2> poly(fp.begin(), fp.end());
  const double z_span = (box.cz + 0.5 * box.height) - (box.cz - 0.5 * box.height);
  return shoelace_area(poly) * z_span;
}

bool box_less(const Box3D & a, const Box3D & b)
{
  const double ka[7] = {a.cx, a.cy, a.cz, a.length, a.width, a.height, a.yaw};
  const double kb[7] = {b.cx, b.cy, b.cz, b.length, b.width, b.height, b.yaw};
  for (int i = 0; i < 7; ++i) {
    if (ka[i] != kb[i]) {
      return ka[i] < kb[i];
    }
  }
  return false;
}

Eigen::Matrix4d composed_velo_to_rect(const Calibration & calib)
{
  Eigen::Matrix4d tr = Eigen::Matrix4d::Identity();
  tr.topLeftCorner<3, 4>() = calib.velo_to_cam;
  Eigen::Matrix4d rect = Eigen::Matrix4d::Identity();
  rect.topLeftCorner<3, 3>() = calib.rect_rotation;
  return rect * tr;
}

}  // namespace

double normalize_yaw(double yaw)
{
  double v = std::fmod(yaw + M_PI, 2.0 * M_PI);
  if (v <= 0.0) {
    v += 2.0 * M_PI;
  }
  return v - M_PI;
}

Box3D camera_box_to_lidar(const GroundTruthLabel & label, const Calibration & calib)
{
  const Eigen::Matrix4d t = composed_velo_to_rect(calib);
  if (std::abs(t.determinant()) < 1e-12) {
    throw SingularTransform("camera_box_to_lidar: rect_rotation * velo_to_cam is not invertible");
  }
  const Eigen::Matrix4d inv = t.inverse();

  const Eigen::Vector4d bottom_cam(label.location[0], label.location[1], label.location[2], 1.0);
  const Eigen::Vector4d bottom_velo = inv * bottom_cam;

  // Heading of the box length axis in camera coordinates: R_y(ry) * e_x.
  const Eigen::Vector3d dir_cam(std::cos(label.rotation_y), 0.0, -std::sin(label.rotation_y));
  const Eigen::Vector3d dir_velo = inv.topLeftCorner<3, 3>() * dir_cam;

  Box3D box;
  box.cx = bottom_velo.x();
  box.cy = bottom_velo.y();
  box.cz = bottom_velo.z() + 0.5 * label.height;
  box.length = label.length;
  box.width = label.width;
  box.height = label.height;
  box.yaw = normalize_yaw(std::atan2(dir_velo.y(), dir_velo.x()));
  return box;
}

Eigen::Vector3d lidar_to_camera(const Eigen::Vector3d & p, const Calibration & calib)
{
  const Eigen::Matrix4d t = composed_velo_to_rect(calib);
  const Eigen::Vector4d q = t * Eigen::Vector4d(p.x(), p.y(), p.z(), 1.0);
  return q.head<3>();
}

std::array<Eigen::Vector3d, 8> box_corners(const Box3D & box)
{
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double hl = 0.5 * box.length;
  const double hw = 0.5 * box.width;
  const double hh = 0.5 * box.height;
  const double lx[4] = {hl, -hl, -hl, hl};
  const double ly[4] = {hw, hw, -hw, -hw};
  std::array<Eigen::Vector3d, 8> out;
  for (int i = 0; i < 8; ++i) {
    const int j = i % 4;
    const double z = i < 4 ? -hh : hh;
    out[i] = Eigen::Vector3d(
      box.cx + c * lx[j] - s * ly[j], box.cy + s * lx[j] + c * ly[j], box.cz + z);
  }
  return out;
}

bool point_in_box(const Point & p, const Box3D & box)
{
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double dx = static_cast<double>(p.x) - box.cx;
  const double dy = static_cast<double>(p.y) - box.cy;
  const double dz = static_cast<double>(p.z) - box.cz;
  const double lx = c * dx + s * dy;
  const double ly = -s * dx + c * dy;
  return std::abs(lx) <= 0.5 * box.length && std::abs(ly) <= 0.5 * box.width &&
         std::abs(dz) <= 0.5 * box.height;
}

PointIndexSet points_in_box(const PointCloud & cloud, const Box3D & box)
{
  PointIndexSet set;
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double hl = 0.5 * box.length;
  const double hw = 0.5 * box.width;
  const double hh = 0.5 * box.height;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Point & p = cloud.points[i];
    const double dx = static_cast<double>(p.x) - box.cx;
    const double dy = static_cast<double>(p.y) - box.cy;
    const double dz = static_cast<double>(p.z) - box.cz;
    if (std::abs(dz) > hh) {
      continue;
    }
    const double lx = c * dx + s * dy;
    const double ly = -s * dx + c * dy;
    if (std::abs(lx) <= hl && std::abs(ly) <= hw) {
      set.indices.push_back(i);
    }
  }
  return set;
}

double footprint_intersection_area(const Box3D & a, const Box3D & b)
{
  return convex_intersection_area(footprint(a), footprint(b));
}

double iou_3d(const Box3D & a, const Box3D & b)
{
  // Canonical argument order makes the result bit-exact under swap.
  if (box_less(b, a)) {
    return iou_3d(b, a);
  }
  const double z_lo = std::max(a.cz - 0.5 * a.height, b.cz - 0.5 * b.height);
  const double z_hi = std::min(a.cz + 0.5 * a.height, b.cz + 0.5 * b.height);
  const double dz = z_hi - z_lo;
  if (dz <= 0.0) {
    return 0.0;
  }
  const double inter_area = footprint_intersection_area(a, b);
  if (inter_area <= 0.0) {
    return 0.0;
  }
  const double inter = inter_area * dz;
  const double uni = box_volume_via_footprint(a) + box_volume_via_footprint(b) - inter;
  if (uni <= 0.0) {
    return 0.0;
  }
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace sorbet::geometry
