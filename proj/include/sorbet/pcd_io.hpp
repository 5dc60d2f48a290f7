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

#ifndef SORBET__PCD_IO_HPP_
#define SORBET__PCD_IO_HPP_

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "sorbet/types.hpp"

namespace sorbet::pcd_io
{

/// Reads a KITTI Velodyne .bin sweep: packed float32 little-endian
/// (x, y, z, intensity), 16 bytes per point, no header. frame_id is taken
/// from the file stem. Throws IoError on a missing or unreadable file,
/// FormatError when the byte length is not a multiple of 16 or any float
/// is non-finite.
PointCloud read_pointcloud(const std::filesystem::path & path);

/// Writes the wire format read_pointcloud parses; a round trip is
/// byte-identical.
void write_pointcloud(const PointCloud & cloud, const std::filesystem::path & path);

/// Parses a KITTI calibration file ("KEY: v1 v2 ... vN", row-major).
/// Requires keys P0..P3, R0_rect and Tr_velo_to_cam; validates that
/// R0_rect and the rotation part of Tr_velo_to_cam are orthonormal
/// within 1e-4.
Calibration read_calibration(const std::filesystem::path & path);
Calibration parse_calibration(std::istream & in, const std::string & origin);

/// Orthonormality residual max|R R^T - I|; exposed for validation tests.
double orthonormality_error(const Eigen::Matrix3d & r);

/// Parses a KITTI object-label file: 15 whitespace-separated fields per
/// line. gt_id is the zero-based line index. Unknown class strings map to
/// Misc; "DontCare" is parsed but callers must not target it.
std::vector<GroundTruthLabel> read_labels(const std::filesystem::path & path);
std::vector<GroundTruthLabel> parse_labels(std::istream & in, const std::string & origin);

/// Reads line-delimited JSON detection records:
///   {"frame": str, "class": str, "score": float,
///    "box": {"cx","cy","cz","l","w","h","yaw"}}
/// Box is in the LiDAR frame, meters/radians. A file starting with the
/// header "frame,class,score,cx,cy,cz,l,w,h,yaw" is read as CSV instead.
/// Scores outside [0,1] or non-positive dims raise ValidationError.
std::vector<DetectionRecord> read_detections(const std::filesystem::path & path);
std::vector<DetectionRecord> parse_detections(std::istream & in, const std::string & origin);
void write_detections(
  const std::vector<DetectionRecord> & dets, const std::filesystem::path & path);

/// Reads obstacle position histories from CSV with header
/// "obstacle_id,t,x,y". Rows may arrive grouped or interleaved; samples of
/// each obstacle must have strictly increasing timestamps.
std::vector<Track> read_tracks(const std::filesystem::path & path);
std::vector<Track> parse_tracks(std::istream & in, const std::string & origin);
void write_tracks(const std::vector<Track> & tracks, const std::filesystem::path & path);

}  // namespace sorbet::pcd_io

#endif  // SORBET__PCD_IO_HPP_
