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

#include "sorbet/perturb.hpp"

#include <algorithm>
#include <cmath>

#include "sorbet/errors.hpp"
#include "sorbet/geometry.hpp"

namespace sorbet::perturb
{

namespace
{

bool needs_distribution(PerturbationKind k)
{
  return k == PerturbationKind::RangeGlobal || k == PerturbationKind::RangeLocal ||
         k == PerturbationKind::RangeDirectional || k == PerturbationKind::DistanceAmplified;
}

void require_kind(const PerturbationSpec & spec, PerturbationKind kind, const char * op)
{
  if (spec.kind != kind) {
    throw ValidationError(std::string(op) + ": spec kind is " + to_string(spec.kind));
  }
}

double draw_axis(Distribution d, double bound, SeededRng & rng)
{
  switch (d) {
    case Distribution::Uniform:
      return rng.uniform(-bound, bound);
    case Distribution::Gaussian:
      return rng.gaussian(bound / 3.0);
    case Distribution::Laplacian:
      return rng.laplacian(bound / 3.0);
  }
  return 0.0;
}

Offset rescale_to_bound(Offset v, double bound)
{
  double n = v.norm();
  if (n <= bound || n == 0.0) {
    return v;
  }
  const double s = bound / n;
  v.dx *= s;
  v.dy *= s;
  v.dz *= s;
  // Guard the last-ulp overshoot of the rescale so the contract is exact.
  while (v.norm() > bound) {
    v.dx *= (1.0 - 4e-16);
    v.dy *= (1.0 - 4e-16);
    v.dz *= (1.0 - 4e-16);
  }
  return v;
}

// In-box index list per box, claimed in box order: a point inside several
// boxes belongs to the first box that saw it, so each point is handled once.
std::vector<std::vector<std::size_t>> claim_box_members(
  const PointCloud & cloud, const std::vector<Box3D> & boxes)
{
  std::vector<std::vector<std::size_t>> members;
  members.reserve(boxes.size());
  std::vector<bool> claimed(cloud.points.size(), false);
  for (const Box3D & box : boxes) {
    PointIndexSet in = geometry::points_in_box(cloud, box);
    std::vector<std::size_t> own;
    own.reserve(in.indices.size());
    for (std::size_t i : in.indices) {
      if (!claimed[i]) {
        claimed[i] = true;
        own.push_back(i);
      }
    }
    members.push_back(std::move(own));
  }
  return members;
}

PointIndexSet union_of(const std::vector<std::vector<std::size_t>> & members)
{
  PointIndexSet set;
  for (const auto & m : members) {
    set.indices.insert(set.indices.end(), m.begin(), m.end());
  }
  set.normalize();
  return set;
}

void erase_removed(PointCloud & cloud, const PointIndexSet & removed)
{
  if (removed.empty()) {
    return;
  }
  std::vector<Point> kept;
  kept.reserve(cloud.points.size() - removed.size());
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    if (cursor < removed.indices.size() && removed.indices[cursor] == i) {
      ++cursor;
      continue;
    }
    kept.push_back(cloud.points[i]);
  }
  cloud.points = std::move(kept);
}

}  // namespace

std::string to_string(PerturbationKind k)
{
  switch (k) {
    case PerturbationKind::RangeGlobal:
      return "range_global";
    case PerturbationKind::RangeLocal:
      return "range_local";
    case PerturbationKind::RangeDirectional:
      return "range_directional";
    case PerturbationKind::FalsePositive:
      return "false_positive";
    case PerturbationKind::ReflectivityDecrease:
      return "reflectivity_decrease";
    case PerturbationKind::ReflectivityIncrease:
      return "reflectivity_increase";
    case PerturbationKind::DistanceAmplified:
      return "distance_amplified";
  }
  return "unknown";
}

std::string to_string(Distribution d)
{
  switch (d) {
    case Distribution::Uniform:
      return "uniform";
    case Distribution::Gaussian:
      return "gaussian";
    case Distribution::Laplacian:
      return "laplacian";
  }
  return "unknown";
}

std::string to_string(Direction d)
{
  switch (d) {
    case Direction::PosX:
      return "+x";
    case Direction::NegX:
      return "-x";
    case Direction::PosY:
      return "+y";
    case Direction::NegY:
      return "-y";
    case Direction::PosZ:
      return "+z";
    case Direction::NegZ:
      return "-z";
  }
  return "unknown";
}

PerturbationKind kind_from_string(const std::string & s)
{
  for (auto k : {PerturbationKind::RangeGlobal, PerturbationKind::RangeLocal,
                 PerturbationKind::RangeDirectional, PerturbationKind::FalsePositive,
                 PerturbationKind::ReflectivityDecrease, PerturbationKind::ReflectivityIncrease,
                 PerturbationKind::DistanceAmplified}) {
    if (to_string(k) == s) {
      return k;
    }
  }
  throw ValidationError("unknown perturbation kind '" + s + "'");
}

Distribution distribution_from_string(const std::string & s)
{
  for (auto d : {Distribution::Uniform, Distribution::Gaussian, Distribution::Laplacian}) {
    if (to_string(d) == s) {
      return d;
    }
  }
  throw ValidationError("unknown distribution '" + s + "'");
}

Direction direction_from_string(const std::string & s)
{
  for (auto d : {Direction::PosX, Direction::NegX, Direction::PosY, Direction::NegY,
                 Direction::PosZ, Direction::NegZ}) {
    if (to_string(d) == s) {
      return d;
    }
  }
  throw ValidationError("unknown direction '" + s + "'");
}

void validate_spec(const PerturbationSpec & spec)
{
  if (!(spec.bound > 0.0)) {
    throw ValidationError("spec.bound must be > 0");
  }
  if (!(spec.removal_rate > 0.0 && spec.removal_rate < 1.0)) {
    throw ValidationError("spec.removal_rate must be in (0,1)");
  }
  if (!(spec.decrease_fraction > 0.0 && spec.decrease_fraction < 1.0)) {
    throw ValidationError("spec.decrease_fraction must be in (0,1)");
  }
  if (!(spec.increase_fraction > 0.0 && spec.increase_fraction < 1.0)) {
    throw ValidationError("spec.increase_fraction must be in (0,1)");
  }
  if (spec.distribution.has_value() != needs_distribution(spec.kind)) {
    throw ValidationError(
      "spec.distribution must be present exactly for range kinds, got kind " +
      to_string(spec.kind));
  }
  if (spec.direction.has_value() != (spec.kind == PerturbationKind::RangeDirectional)) {
    throw ValidationError("spec.direction must be present exactly for range_directional");
  }
  if (spec.kind == PerturbationKind::DistanceAmplified &&
      spec.distribution != Distribution::Uniform) {
    throw ValidationError("distance_amplified supports the uniform distribution only");
  }
}

double DistancePrecisionProfile::scale_at(double range) const
{
  if (breakpoints.empty()) {
    return 1.0;
  }
  double scale = breakpoints.front().scale;
  for (const Breakpoint & bp : breakpoints) {
    if (range >= bp.min_range) {
      scale = bp.scale;
    } else {
      break;
    }
  }
  return scale;
}

void DistancePrecisionProfile::validate() const
{
  double prev = -1.0;
  for (const Breakpoint & bp : breakpoints) {
    if (!(bp.min_range > prev)) {
      throw ValidationError("distance profile ranges must strictly increase");
    }
    if (!(bp.scale > 0.0)) {
      throw ValidationError("distance profile scales must be > 0");
    }
    prev = bp.min_range;
  }
}

DistancePrecisionProfile DistancePrecisionProfile::defaults()
{
  return DistancePrecisionProfile{{{0.0, 0.35}, {10.0, 0.5}, {30.0, 1.0}, {60.0, 2.5}}};
}

Offset sample_offset(Distribution distribution, double bound, SeededRng & rng, AxisMask axes)
{
  Offset off;
  if (axes.x) {
    off.dx = draw_axis(distribution, bound, rng);
  }
  if (axes.y) {
    off.dy = draw_axis(distribution, bound, rng);
  }
  if (axes.z) {
    off.dz = draw_axis(distribution, bound, rng);
  }
  return rescale_to_bound(off, bound);
}

double apply_offset_within(Point & p, Offset off, double limit)
{
  const double ox = p.x;
  const double oy = p.y;
  const double oz = p.z;
  for (int attempt = 0; attempt < 8; ++attempt) {
    const auto nx = static_cast<float>(ox + off.dx);
    const auto ny = static_cast<float>(oy + off.dy);
    const auto nz = static_cast<float>(oz + off.dz);
    const double rx = static_cast<double>(nx) - ox;
    const double ry = static_cast<double>(ny) - oy;
    const double rz = static_cast<double>(nz) - oz;
    const double realized = std::sqrt(rx * rx + ry * ry + rz * rz);
    if (realized <= limit) {
      p.x = nx;
      p.y = ny;
      p.z = nz;
      return realized;
    }
    // float rounding pushed the stored shift past the limit; shrink and retry
    const double shrink = (limit / realized) * (1.0 - 1e-12);
    off.dx *= shrink;
    off.dy *= shrink;
    off.dz *= shrink;
  }
  return 0.0;  // leave the point untouched rather than break the bound
}

PerturbationOutcome perturb_range_global(const PointCloud & cloud, const PerturbationSpec & spec)
{
  require_kind(spec, PerturbationKind::RangeGlobal, "perturb_range_global");
  validate_spec(spec);
  SeededRng rng(spec.seed);
  PerturbationOutcome out;
  out.cloud = cloud;
  out.moved.indices.reserve(cloud.points.size());
  for (std::size_t i = 0; i < out.cloud.points.size(); ++i) {
    const Offset off = sample_offset(*spec.distribution, spec.bound, rng, kAxesXY);
    const double shift = apply_offset_within(out.cloud.points[i], off, spec.bound);
    out.max_shift = std::max(out.max_shift, shift);
    out.moved.indices.push_back(i);
  }
  return out;
}

PerturbationOutcome perturb_range_local(
  const PointCloud & cloud, const std::vector<Box3D> & boxes, const PerturbationSpec & spec)
{
  require_kind(spec, PerturbationKind::RangeLocal, "perturb_range_local");
  validate_spec(spec);
  SeededRng rng(spec.seed);
  PerturbationOutcome out;
  out.cloud = cloud;
  out.moved = union_of(claim_box_members(cloud, boxes));
  for (std::size_t i : out.moved.indices) {
    const Offset off = sample_offset(*spec.distribution, spec.bound, rng, kAxesXYZ);
    const double shift = apply_offset_within(out.cloud.points[i], off, spec.bound);
    out.max_shift = std::max(out.max_shift, shift);
  }
  return out;
}

PerturbationOutcome perturb_range_directional(
  const PointCloud & cloud, const std::vector<Box3D> & boxes, const PerturbationSpec & spec)
{
  require_kind(spec, PerturbationKind::RangeDirectional, "perturb_range_directional");
  validate_spec(spec);
  SeededRng rng(spec.seed);
  PerturbationOutcome out;
  out.cloud = cloud;
  const auto members = claim_box_members(cloud, boxes);
  for (const auto & box_members : members) {
    for (std::size_t i : box_members) {
      // magnitude: one draw folded to [0, bound]
      double m = std::abs(draw_axis(*spec.distribution, spec.bound, rng));
      m = std::min(m, spec.bound);
      Offset off;
      switch (*spec.direction) {
        case Direction::PosX:
          off.dx = m;
          break;
        case Direction::NegX:
          off.dx = -m;
          break;
        case Direction::PosY:
          off.dy = m;
          break;
        case Direction::NegY:
          off.dy = -m;
          break;
        case Direction::PosZ:
          off.dz = m;
          break;
        case Direction::NegZ:
          off.dz = -m;
          break;
      }
      const double shift = apply_offset_within(out.cloud.points[i], off, spec.bound);
      out.max_shift = std::max(out.max_shift, shift);
      out.moved.indices.push_back(i);
    }
  }
  out.moved.normalize();
  return out;
}

PerturbationOutcome perturb_false_positive(
  const PointCloud & cloud, const std::vector<Box3D> * boxes, const PerturbationSpec & spec)
{
  require_kind(spec, PerturbationKind::FalsePositive, "perturb_false_positive");
  validate_spec(spec);
  SeededRng rng(spec.seed);
  PerturbationOutcome out;
  out.cloud = cloud;

  if (boxes != nullptr) {
    const PointIndexSet scope = union_of(claim_box_members(cloud, *boxes));
    for (std::size_t i : scope.indices) {
      if (rng.uniform01() < spec.removal_rate) {
        out.removed.indices.push_back(i);
      }
    }
  } else {
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
      if (rng.uniform01() < spec.removal_rate) {
        out.removed.indices.push_back(i);
      }
    }
  }
  erase_removed(out.cloud, out.removed);
  return out;
}

PerturbationOutcome perturb_reflectivity(
  const PointCloud & cloud, const std::vector<Box3D> & boxes, const PerturbationSpec & spec)
{
  if (spec.kind != PerturbationKind::ReflectivityDecrease &&
      spec.kind != PerturbationKind::ReflectivityIncrease) {
    throw ValidationError("perturb_reflectivity: spec kind is " + to_string(spec.kind));
  }
  validate_spec(spec);
  SeededRng rng(spec.seed);
  PerturbationOutcome out;
  out.cloud = cloud;
  const auto members = claim_box_members(cloud, boxes);

  if (spec.kind == PerturbationKind::ReflectivityDecrease) {
    for (const auto & box_members : members) {
      std::vector<std::size_t> pool = box_members;
      const std::size_t k = pool.size();
      const auto m = static_cast<std::size_t>(
        std::llround(spec.decrease_fraction * static_cast<double>(k)));
      // partial Fisher-Yates: the first m entries are a uniform sample
      for (std::size_t j = 0; j < m; ++j) {
        const std::size_t r = j + rng.below(k - j);
        std::swap(pool[j], pool[r]);
        out.removed.indices.push_back(pool[j]);
      }
    }
    out.removed.normalize();
    erase_removed(out.cloud, out.removed);
    return out;
  }

  std::vector<Point> added;
  for (const auto & box_members : members) {
    const std::size_t k = box_members.size();
    if (k == 0) {
      continue;
    }
    const auto n_add =
      static_cast<std::size_t>(std::llround(spec.increase_fraction * static_cast<double>(k)));
    for (std::size_t j = 0; j < n_add; ++j) {
      Point p = cloud.points[box_members[rng.below(k)]];
      const Offset jitter = sample_offset(Distribution::Uniform, spec.bound, rng, kAxesXYZ);
      const double shift = apply_offset_within(p, jitter, spec.bound);
      out.max_shift = std::max(out.max_shift, shift);
      added.push_back(p);
    }
  }
  out.cloud.points.insert(out.cloud.points.end(), added.begin(), added.end());
  out.added_count = added.size();
  return out;
}

PerturbationOutcome perturb_distance_amplified(
  const PointCloud & cloud, const std::vector<Box3D> & boxes, const PerturbationSpec & spec,
  const DistancePrecisionProfile & profile)
{
  require_kind(spec, PerturbationKind::DistanceAmplified, "perturb_distance_amplified");
  validate_spec(spec);
  profile.validate();
  SeededRng rng(spec.seed);
  PerturbationOutcome out;
  out.cloud = cloud;
  const auto members = claim_box_members(cloud, boxes);
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    const double effective_bound = spec.bound * profile.scale_at(boxes[b].range_xy());
    for (std::size_t i : members[b]) {
      const Offset off = sample_offset(*spec.distribution, effective_bound, rng, kAxesXYZ);
      const double shift = apply_offset_within(out.cloud.points[i], off, effective_bound);
      out.max_shift = std::max(out.max_shift, shift);
      out.moved.indices.push_back(i);
    }
  }
  out.moved.normalize();
  return out;
}

SuiteConfig SuiteConfig::default_suite(std::uint64_t master_seed)
{
  SuiteConfig config;
  config.master_seed = master_seed;

  auto base = [&config](PerturbationKind kind) {
    PerturbationSpec spec;
    spec.kind = kind;
    spec.bound = config.bound;
    spec.removal_rate = config.removal_rate;
    spec.decrease_fraction = config.decrease_fraction;
    spec.increase_fraction = config.increase_fraction;
    return spec;
  };

  const Distribution dists[3] = {
    Distribution::Uniform, Distribution::Gaussian, Distribution::Laplacian};
  for (Distribution d : dists) {
    PerturbationSpec spec = base(PerturbationKind::RangeGlobal);
    spec.distribution = d;
    config.variants.push_back({"range_global_" + to_string(d), spec, false});
  }
  for (Distribution d : dists) {
    PerturbationSpec spec = base(PerturbationKind::RangeLocal);
    spec.distribution = d;
    config.variants.push_back({"range_local_" + to_string(d), spec, true});
  }
  for (Distribution d : dists) {
    PerturbationSpec spec = base(PerturbationKind::RangeDirectional);
    spec.distribution = d;
    spec.direction = Direction::PosX;
    config.variants.push_back({"range_directional_" + to_string(d) + "_px", spec, true});
  }
  config.variants.push_back({"false_positive_local", base(PerturbationKind::FalsePositive), true});
  config.variants.push_back(
    {"reflectivity_decrease", base(PerturbationKind::ReflectivityDecrease), true});
  config.variants.push_back(
    {"reflectivity_increase", base(PerturbationKind::ReflectivityIncrease), true});
  {
    PerturbationSpec spec = base(PerturbationKind::DistanceAmplified);
    spec.distribution = Distribution::Uniform;
    config.variants.push_back({"distance_amplified_uniform", spec, true});
  }
  config.variants.push_back(
    {"false_positive_global", base(PerturbationKind::FalsePositive), false});
  {
    PerturbationSpec spec = base(PerturbationKind::RangeDirectional);
    spec.distribution = Distribution::Uniform;
    spec.direction = Direction::NegX;
    config.variants.push_back({"range_directional_uniform_nx", spec, true});
  }
  return config;
}

std::uint64_t variant_seed(
  std::uint64_t master_seed, const std::string & frame_id, const PerturbationSpec & spec)
{
  std::uint64_t h = mix_u64(master_seed);
  h = hash_combine(h, frame_id);
  h = hash_combine(h, static_cast<std::uint64_t>(spec.kind));
  h = hash_combine(h, spec.distribution ? 1 + static_cast<std::uint64_t>(*spec.distribution) : 0);
  h = hash_combine(h, spec.direction ? 1 + static_cast<std::uint64_t>(*spec.direction) : 0);
  return h;
}

PerturbationOutcome apply_variant(
  const PointCloud & cloud, const std::vector<Box3D> & target_boxes, const SuiteVariant & variant,
  const DistancePrecisionProfile & profile)
{
  const PerturbationSpec & spec = variant.spec;
  switch (spec.kind) {
    case PerturbationKind::RangeGlobal:
      return perturb_range_global(cloud, spec);
    case PerturbationKind::RangeLocal:
      return perturb_range_local(cloud, target_boxes, spec);
    case PerturbationKind::RangeDirectional:
      return perturb_range_directional(cloud, target_boxes, spec);
    case PerturbationKind::FalsePositive:
      return perturb_false_positive(cloud, variant.local_scope ? &target_boxes : nullptr, spec);
    case PerturbationKind::ReflectivityDecrease:
    case PerturbationKind::ReflectivityIncrease:
      return perturb_reflectivity(cloud, target_boxes, spec);
    case PerturbationKind::DistanceAmplified:
      return perturb_distance_amplified(cloud, target_boxes, spec, profile);
  }
  throw ValidationError("apply_variant: unknown kind");
}

std::vector<SuiteResult> build_suite(
  const PointCloud & frame, const std::vector<GroundTruthLabel> & labels,
  const Calibration & calib, const SuiteConfig & config)
{
  std::vector<Box3D> target_boxes;
  for (const GroundTruthLabel & label : labels) {
    if (label.object_class == ObjectClass::DontCare) {
      continue;
    }
    target_boxes.push_back(geometry::camera_box_to_lidar(label, calib));
  }

  std::vector<SuiteResult> results;
  results.reserve(config.variants.size());
  for (const SuiteVariant & variant : config.variants) {
    SuiteVariant seeded = variant;
    seeded.spec.seed = variant_seed(config.master_seed, frame.frame_id, variant.spec);
    results.push_back(
      {seeded.name, seeded.spec, apply_variant(frame, target_boxes, seeded, config.profile)});
  }
  return results;
}

}  // namespace sorbet::perturb
