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

#include "sorbet/pcd_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "sorbet/errors.hpp"
#include "sorbet/geometry.hpp"

namespace sorbet
{

std::string to_string(ObjectClass c)
{
  switch (c) {
    case ObjectClass::Car:
      return "Car";
    case ObjectClass::Pedestrian:
      return "Pedestrian";
    case ObjectClass::Cyclist:
      return "Cyclist";
    case ObjectClass::Misc:
      return "Misc";
    case ObjectClass::DontCare:
      return "DontCare";
  }
  return "Misc";
}

ObjectClass object_class_from_string(const std::string & s)
{
  if (s == "Car") {
    return ObjectClass::Car;
  }
  if (s == "Pedestrian") {
    return ObjectClass::Pedestrian;
  }
  if (s == "Cyclist") {
    return ObjectClass::Cyclist;
  }
  if (s == "DontCare") {
    return ObjectClass::DontCare;
  }
  // Van, Truck, Tram, Person_sitting and anything else fold into Misc.
  return ObjectClass::Misc;
}

bool PointIndexSet::contains(std::size_t i) const
{
  return std::binary_search(indices.begin(), indices.end(), i);
}

void PointIndexSet::normalize()
{
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
}

}  // namespace sorbet

namespace sorbet::pcd_io
{

namespace
{

constexpr std::size_t kPointRecordBytes = 16;

double parse_double(const std::string & token, const std::string & origin)
{
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception &) {
    throw FormatError(origin + ": unparsable numeric token '" + token + "'");
  }
  if (used != token.size()) {
    throw FormatError(origin + ": unparsable numeric token '" + token + "'");
  }
  return v;
}

std::vector<std::string> split_ws(const std::string & line)
{
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) {
    out.push_back(tok);
  }
  return out;
}

void validate_detection(const DetectionRecord & det, const std::string & origin)
{
  if (!(det.score >= 0.0 && det.score <= 1.0)) {
    throw ValidationError(origin + ": detection score " + std::to_string(det.score) +
                          " outside [0,1]");
  }
  if (!det.box.valid_dims()) {
    throw ValidationError(origin + ": detection box dimensions must be positive");
  }
}

}  // namespace

PointCloud read_pointcloud(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("read_pointcloud: cannot open " + path.string());
  }
  in.seekg(0, std::ios::end);
  const std::streamoff bytes = in.tellg();
  in.seekg(0, std::ios::beg);
  if (bytes < 0) {
    throw IoError("read_pointcloud: cannot stat " + path.string());
  }
  if (static_cast<std::size_t>(bytes) % kPointRecordBytes != 0) {
    throw FormatError(
      "read_pointcloud: " + path.string() + " has " + std::to_string(bytes) +
      " bytes, not a multiple of 16");
  }

  PointCloud cloud;
  cloud.frame_id = path.stem().string();
  const std::size_t count = static_cast<std::size_t>(bytes) / kPointRecordBytes;
  cloud.points.resize(count);
  if (count > 0) {
    in.read(reinterpret_cast<char *>(cloud.points.data()), bytes);
    if (!in) {
      throw IoError("read_pointcloud: short read on " + path.string());
    }
  }
  for (std::size_t i = 0; i < count; ++i) {
    const Point & p = cloud.points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z) ||
        !std::isfinite(p.intensity)) {
      throw FormatError(
        "read_pointcloud: non-finite value in point " + std::to_string(i) + " of " +
        path.string());
    }
  }
  return cloud;
}

void write_pointcloud(const PointCloud & cloud, const std::filesystem::path & path)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("write_pointcloud: cannot open " + path.string() + " for writing");
  }
  static_assert(sizeof(Point) == kPointRecordBytes, "Point must match the 16-byte wire record");
  if (!cloud.points.empty()) {
    out.write(
      reinterpret_cast<const char *>(cloud.points.data()),
      static_cast<std::streamsize>(cloud.points.size() * kPointRecordBytes));
  }
  if (!out) {
    throw IoError("write_pointcloud: short write on " + path.string());
  }
}

double orthonormality_error(const Eigen::Matrix3d & r)
{
  return (r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
}

Calibration parse_calibration(std::istream & in, const std::string & origin)
{
  std::map<std::string, std::vector<double>> entries;
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t colon = line.find(':');
    if (colon == std::string::npos) {
      continue;  // blank or comment-ish trailer lines
    }
    const std::string key = line.substr(0, colon);
    std::vector<double> values;
    for (const std::string & tok : split_ws(line.substr(colon + 1))) {
      values.push_back(parse_double(tok, origin + " [" + key + "]"));
    }
    entries[key] = std::move(values);
  }

  auto fetch = [&](const std::string & key, std::size_t n) -> const std::vector<double> & {
    auto it = entries.find(key);
    if (it == entries.end()) {
      throw FormatError(origin + ": missing calibration key " + key);
    }
    if (it->second.size() != n) {
      throw FormatError(
        origin + ": key " + key + " has " + std::to_string(it->second.size()) +
        " values, expected " + std::to_string(n));
    }
    return it->second;
  };

  for (const char * key : {"P0", "P1", "P2", "P3"}) {
    fetch(key, 12);
  }

  Calibration calib;
  const auto & p2 = fetch("P2", 12);
  const auto & r0 = fetch("R0_rect", 9);
  const auto & tr = fetch("Tr_velo_to_cam", 12);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      calib.cam_projection(r, c) = p2[r * 4 + c];
      calib.velo_to_cam(r, c) = tr[r * 4 + c];
    }
    for (int c = 0; c < 3; ++c) {
      calib.rect_rotation(r, c) = r0[r * 3 + c];
    }
  }

  if (orthonormality_error(calib.rect_rotation) > 1e-4) {
    throw ValidationError(origin + ": R0_rect is not orthonormal within 1e-4");
  }
  if (orthonormality_error(calib.velo_to_cam.leftCols<3>()) > 1e-4) {
    throw ValidationError(origin + ": Tr_velo_to_cam rotation is not orthonormal within 1e-4");
  }
  return calib;
}

Calibration read_calibration(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw IoError("read_calibration: cannot open " + path.string());
  }
  return parse_calibration(in, path.string());
}

std::vector<GroundTruthLabel> parse_labels(std::istream & in, const std::string & origin)
{
  std::vector<GroundTruthLabel> labels;
  std::string line;
  int line_index = 0;
  while (std::getline(in, line)) {
    const std::vector<std::string> fields = split_ws(line);
    if (fields.empty()) {
      continue;
    }
    if (fields.size() != 15) {
      throw FormatError(
        origin + ": line " + std::to_string(line_index) + " has " +
        std::to_string(fields.size()) + " fields, expected 15");
    }
    const std::string where = origin + ":" + std::to_string(line_index);
    GroundTruthLabel label;
    label.gt_id = line_index;
    label.object_class = object_class_from_string(fields[0]);
    label.truncation = parse_double(fields[1], where);
    label.occlusion = static_cast<int>(parse_double(fields[2], where));
    label.alpha = parse_double(fields[3], where);
    for (int i = 0; i < 4; ++i) {
      label.bbox2d[i] = parse_double(fields[4 + i], where);
    }
    label.height = parse_double(fields[8], where);
    label.width = parse_double(fields[9], where);
    label.length = parse_double(fields[10], where);
    for (int i = 0; i < 3; ++i) {
      label.location[i] = parse_double(fields[11 + i], where);
    }
    label.rotation_y = parse_double(fields[14], where);
    if (label.object_class != ObjectClass::DontCare &&
        !(label.height > 0.0 && label.width > 0.0 && label.length > 0.0)) {
      throw ValidationError(where + ": non-DontCare label with non-positive dimensions");
    }
    labels.push_back(label);
    ++line_index;
  }
  return labels;
}

std::vector<GroundTruthLabel> read_labels(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw IoError("read_labels: cannot open " + path.string());
  }
  return parse_labels(in, path.string());
}

namespace
{

constexpr const char * kDetectionCsvHeader = "frame,class,score,cx,cy,cz,l,w,h,yaw";

DetectionRecord detection_from_json_line(const std::string & line, const std::string & where)
{
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception & e) {
    throw FormatError(where + ": invalid JSON: " + e.what());
  }
  DetectionRecord det;
  try {
    det.frame_id = j.at("frame").get<std::string>();
    det.object_class = object_class_from_string(j.at("class").get<std::string>());
    det.score = j.at("score").get<double>();
    const nlohmann::json & b = j.at("box");
    det.box.cx = b.at("cx").get<double>();
    det.box.cy = b.at("cy").get<double>();
    det.box.cz = b.at("cz").get<double>();
    det.box.length = b.at("l").get<double>();
    det.box.width = b.at("w").get<double>();
    det.box.height = b.at("h").get<double>();
    det.box.yaw = geometry::normalize_yaw(b.at("yaw").get<double>());
  } catch (const nlohmann::json::exception & e) {
    throw FormatError(where + ": missing or mistyped field: " + e.what());
  }
  return det;
}

DetectionRecord detection_from_csv_line(const std::string & line, const std::string & where)
{
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    cells.push_back(cell);
  }
  if (cells.size() != 10) {
    throw FormatError(where + ": expected 10 CSV cells, got " + std::to_string(cells.size()));
  }
  DetectionRecord det;
  det.frame_id = cells[0];
  det.object_class = object_class_from_string(cells[1]);
  det.score = parse_double(cells[2], where);
  det.box.cx = parse_double(cells[3], where);
  det.box.cy = parse_double(cells[4], where);
  det.box.cz = parse_double(cells[5], where);
  det.box.length = parse_double(cells[6], where);
  det.box.width = parse_double(cells[7], where);
  det.box.height = parse_double(cells[8], where);
  det.box.yaw = geometry::normalize_yaw(parse_double(cells[9], where));
  return det;
}

}  // namespace

std::vector<DetectionRecord> parse_detections(std::istream & in, const std::string & origin)
{
  std::vector<DetectionRecord> dets;
  std::string line;
  int line_index = 0;
  bool csv_mode = false;
  bool saw_content = false;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
      line.pop_back();
    }
    if (line.find_first_not_of(" \t") == std::string::npos) {
      ++line_index;
      continue;
    }
    const std::string where = origin + ":" + std::to_string(line_index);
    if (!saw_content) {
      saw_content = true;
      // CSV fallback: a header row instead of a JSON object switches modes
      if (line == kDetectionCsvHeader) {
        csv_mode = true;
        ++line_index;
        continue;
      }
    }
    DetectionRecord det =
      csv_mode ? detection_from_csv_line(line, where) : detection_from_json_line(line, where);
    validate_detection(det, where);
    dets.push_back(std::move(det));
    ++line_index;
  }
  return dets;
}

std::vector<DetectionRecord> read_detections(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw IoError("read_detections: cannot open " + path.string());
  }
  return parse_detections(in, path.string());
}

void write_detections(const std::vector<DetectionRecord> & dets, const std::filesystem::path & path)
{
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw IoError("write_detections: cannot open " + path.string() + " for writing");
  }
  for (const DetectionRecord & det : dets) {
    nlohmann::ordered_json j;
    j["frame"] = det.frame_id;
    j["class"] = to_string(det.object_class);
    j["score"] = det.score;
    j["box"] = {{"cx", det.box.cx},   {"cy", det.box.cy},     {"cz", det.box.cz},
                {"l", det.box.length}, {"w", det.box.width},  {"h", det.box.height},
                {"yaw", det.box.yaw}};
    out << j.dump() << "\n";
  }
  if (!out) {
    throw IoError("write_detections: short write on " + path.string());
  }
}

std::vector<Track> parse_tracks(std::istream & in, const std::string & origin)
{
  std::string header;
  if (!std::getline(in, header)) {
    return {};
  }
  // Tolerate a UTF-8 BOM and trailing CR.
  if (header.size() >= 3 && header.compare(0, 3, "\xEF\xBB\xBF") == 0) {
    header.erase(0, 3);
  }
  while (!header.empty() && (header.back() == '\r' || header.back() == ' ')) {
    header.pop_back();
  }
  if (header != "obstacle_id,t,x,y") {
    throw FormatError(origin + ": expected CSV header 'obstacle_id,t,x,y', got '" + header + "'");
  }

  std::vector<Track> tracks;
  std::map<std::int64_t, std::size_t> slot;
  std::string line;
  int line_index = 1;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
      line.pop_back();
    }
    if (line.empty()) {
      ++line_index;
      continue;
    }
    const std::string where = origin + ":" + std::to_string(line_index);
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cells.push_back(cell);
    }
    if (cells.size() != 4) {
      throw FormatError(where + ": expected 4 CSV cells, got " + std::to_string(cells.size()));
    }
    const auto id = static_cast<std::int64_t>(parse_double(cells[0], where));
    TrackSample s;
    s.t = parse_double(cells[1], where);
    s.x = parse_double(cells[2], where);
    s.y = parse_double(cells[3], where);

    auto it = slot.find(id);
    if (it == slot.end()) {
      it = slot.emplace(id, tracks.size()).first;
      Track t;
      t.obstacle_id = id;
      tracks.push_back(std::move(t));
    }
    Track & track = tracks[it->second];
    if (!track.samples.empty() && s.t <= track.samples.back().t) {
      throw ValidationError(
        where + ": timestamps of obstacle " + std::to_string(id) + " must strictly increase");
    }
    track.samples.push_back(s);
    ++line_index;
  }
  return tracks;
}

std::vector<Track> read_tracks(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw IoError("read_tracks: cannot open " + path.string());
  }
  return parse_tracks(in, path.string());
}

void write_tracks(const std::vector<Track> & tracks, const std::filesystem::path & path)
{
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw IoError("write_tracks: cannot open " + path.string() + " for writing");
  }
  out << "obstacle_id,t,x,y\n";
  char buf[128];
  for (const Track & track : tracks) {
    for (const TrackSample & s : track.samples) {
      std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g\n",
                    static_cast<long long>(track.obstacle_id), s.t, s.x, s.y);
      out << buf;
    }
  }
  if (!out) {
    throw IoError("write_tracks: short write on " + path.string());
  }
}

}  // namespace sorbet::pcd_io
