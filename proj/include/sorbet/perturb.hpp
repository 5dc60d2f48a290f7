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

#ifndef SORBET__PERTURB_HPP_
#define SORBET__PERTURB_HPP_

#include <optional>
#include <string>
#include <vector>

#include "sorbet/random.hpp"
#include "sorbet/types.hpp"

namespace sorbet::perturb
{

enum class PerturbationKind {
  RangeGlobal,
  RangeLocal,
  RangeDirectional,
  FalsePositive,
  ReflectivityDecrease,
  ReflectivityIncrease,
  DistanceAmplified,
};

enum class Distribution { Uniform, Gaussian, Laplacian };

enum class Direction { PosX, NegX, PosY, NegY, PosZ, NegZ };

std::string to_string(PerturbationKind k);
std::string to_string(Distribution d);
std::string to_string(Direction d);
PerturbationKind kind_from_string(const std::string & s);
Distribution distribution_from_string(const std::string & s);
Direction direction_from_string(const std::string & s);

/// Fully seeded description of one perturbation. `distribution` is required
/// for the range kinds and DistanceAmplified, `direction` only for
/// RangeDirectional.
struct PerturbationSpec
{
  PerturbationKind kind = PerturbationKind::RangeGlobal;
  std::optional<Distribution> distribution;
  std::optional<Direction> direction;
  double bound = 0.02;              // meters; LiDAR distance accuracy class
  double removal_rate = 1e-4;       // FalsePositive: one point in 10,000
  double decrease_fraction = 0.60;  // ReflectivityDecrease
  double increase_fraction = 0.67;  // ReflectivityIncrease
  std::uint64_t seed = 0;
};

/// Throws ValidationError when the spec violates its invariants.
void validate_spec(const PerturbationSpec & spec);

/// Piecewise-constant magnitude multiplier over sensor range: the scale of
/// the last breakpoint whose min_range is <= the obstacle range applies,
/// and the final scale holds beyond the last breakpoint.
struct DistancePrecisionProfile
{
  struct Breakpoint
  {
    double min_range = 0.0;  // meters
    double scale = 1.0;      // multiplier of spec.bound
  };

  std::vector<Breakpoint> breakpoints;

  double scale_at(double range) const;
  void validate() const;

  /// Library default shaped after long-range spinning-LiDAR precision
  /// growth; configurable, not a measured truth.
  static DistancePrecisionProfile defaults();
};

struct PerturbationOutcome
{
  PointCloud cloud;
  PointIndexSet moved;    // indices into the *input* cloud
  PointIndexSet removed;  // indices into the *input* cloud
  std::size_t added_count = 0;
  double max_shift = 0.0;  // meters, realized on stored float coordinates
};

struct Offset
{
  double dx = 0.0;
  double dy = 0.0;
  double dz = 0.0;

  double norm() const { return std::sqrt(dx * dx + dy * dy + dz * dz); }
};

struct AxisMask
{
  bool x = false;
  bool y = false;
  bool z = false;
};

inline constexpr AxisMask kAxesXY{true, true, false};
inline constexpr AxisMask kAxesXYZ{true, true, true};

/// Draws one offset: each requested axis from the distribution (Uniform over
/// [-bound, bound], Gaussian sigma = bound/3, Laplacian scale = bound/3),
/// unrequested axes zero. A draw whose Euclidean norm exceeds `bound` is
/// rescaled onto the bound, so the combined shift never exceeds it.
Offset sample_offset(Distribution distribution, double bound, SeededRng & rng, AxisMask axes);

/// Applies `off` to the float coordinates of `p` so the realized
/// displacement (measured on the stored values) never exceeds `limit`.
/// Returns the realized displacement norm.
double apply_offset_within(Point & p, Offset off, double limit);

/// Independent x/y shift for every point; z and intensity untouched.
PerturbationOutcome perturb_range_global(const PointCloud & cloud, const PerturbationSpec & spec);

/// x/y/z shifts restricted to points inside the target boxes.
PerturbationOutcome perturb_range_local(
  const PointCloud & cloud, const std::vector<Box3D> & boxes, const PerturbationSpec & spec);

/// Per-box common direction: each in-box point moves along spec.direction
/// by a magnitude drawn from the distribution folded to [0, bound].
PerturbationOutcome perturb_range_directional(
  const PointCloud & cloud, const std::vector<Box3D> & boxes, const PerturbationSpec & spec);

/// Independent per-point removal with probability spec.removal_rate.
/// Scope is the whole cloud when boxes is null, else the in-box points.
PerturbationOutcome perturb_false_positive(
  const PointCloud & cloud, const std::vector<Box3D> * boxes, const PerturbationSpec & spec);

/// Decrease: removes exactly round(decrease_fraction * k) of each box's k
/// points, uniformly without replacement. Increase: appends exactly
/// round(increase_fraction * k) duplicates of uniformly chosen in-box
/// points, each jittered by a uniform offset of norm <= bound.
PerturbationOutcome perturb_reflectivity(
  const PointCloud & cloud, const std::vector<Box3D> & boxes, const PerturbationSpec & spec);

/// Range-local shifting with the bound scaled per box by the profile at the
/// box's planar range. Spec distribution must be Uniform.
PerturbationOutcome perturb_distance_amplified(
  const PointCloud & cloud, const std::vector<Box3D> & boxes, const PerturbationSpec & spec,
  const DistancePrecisionProfile & profile);

/// One suite entry: a named spec plus the scope flag used by kinds that can
/// run either globally or locally (FalsePositive).
struct SuiteVariant
{
  std::string name;
  PerturbationSpec spec;
  bool local_scope = true;
};

struct SuiteConfig
{
  std::uint64_t master_seed = 0;
  double bound = 0.02;
  double removal_rate = 1e-4;
  double decrease_fraction = 0.60;
  double increase_fraction = 0.67;
  DistancePrecisionProfile profile = DistancePrecisionProfile::defaults();
  std::vector<SuiteVariant> variants;

  /// The default 15-variant suite: range inaccuracy global/local/directional
  /// x {uniform, gaussian, laplacian}, false positive local+global,
  /// reflectivity decrease/increase, distance-amplified uniform, and a
  /// second directional variant along -x.
  static SuiteConfig default_suite(std::uint64_t master_seed);
};

/// Deterministic per-variant seed from the master seed, frame id and the
/// variant's (kind, distribution, direction).
std::uint64_t variant_seed(
  std::uint64_t master_seed, const std::string & frame_id, const PerturbationSpec & spec);

/// Dispatches one variant against one frame.
PerturbationOutcome apply_variant(
  const PointCloud & cloud, const std::vector<Box3D> & target_boxes, const SuiteVariant & variant,
  const DistancePrecisionProfile & profile);

struct SuiteResult
{
  std::string name;
  PerturbationSpec spec;
  PerturbationOutcome outcome;
};

/// Runs every configured variant against the frame. Each output derives
/// solely from the original cloud; perturbations never compose. Target
/// boxes come from the non-DontCare labels mapped into the LiDAR frame.
std::vector<SuiteResult> build_suite(
  const PointCloud & frame, const std::vector<GroundTruthLabel> & labels,
  const Calibration & calib, const SuiteConfig & config);

}  // namespace sorbet::perturb

#endif  // SORBET__PERTURB_HPP_
