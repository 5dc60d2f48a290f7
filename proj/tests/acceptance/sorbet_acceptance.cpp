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

// Release acceptance suite. Every criterion prints one PASS/FAIL line;
// the process exits nonzero if any fails. Tolerances are pinned here, in
// code, and the oracles are written against the contracts rather than the
// implementation paths they check.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sorbet/cascade.hpp"
#include "sorbet/geometry.hpp"
#include "sorbet/metrics.hpp"
#include "sorbet/mock_detector.hpp"
#include "sorbet/pcd_io.hpp"
#include "sorbet/perturb.hpp"
#include "sorbet/pipeline.hpp"
#include "sorbet/random.hpp"
#include "test_util.hpp"

using namespace sorbet;

namespace
{

class Criterion
{
public:
  Criterion(int id, std::string title) : id_(id), title_(std::move(title)) {}

  void expect(bool condition, const std::string & detail)
  {
    if (!condition && failures_.size() < 5) {
      failures_.push_back(detail);
    }
    failed_ = failed_ || !condition;
  }

  bool report(double elapsed_s) const
  {
    std::ostringstream line;
    line << (failed_ ? "[FAIL]" : "[PASS]") << " criterion " << id_ << ": " << title_;
    line.setf(std::ios::fixed);
    line.precision(1);
    line << " (" << elapsed_s << " s)";
    std::cout << line.str() << "\n";
    for (const std::string & f : failures_) {
      std::cout << "        " << f << "\n";
    }
    return !failed_;
  }

private:
  int id_;
  std::string title_;
  bool failed_ = false;
  std::vector<std::string> failures_;
};

double shift_norm(const Point & a, const Point & b)
{
  const double dx = static_cast<double>(b.x) - static_cast<double>(a.x);
  const double dy = static_cast<double>(b.y) - static_cast<double>(a.y);
  const double dz = static_cast<double>(b.z) - static_cast<double>(a.z);
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

bool bit_equal(const Point & a, const Point & b)
{
  return std::memcmp(&a, &b, sizeof(Point)) == 0;
}

std::string fmt(double v)
{
  std::ostringstream ss;
  ss.precision(12);
  ss << v;
  return ss.str();
}

// Scene with non-overlapping boxes at controlled ranges, including a far
// one so the distance profile's >1 scales get exercised.
struct BoundScene
{
  PointCloud cloud;
  std::vector<Box3D> boxes;
};

BoundScene make_bound_scene(SeededRng & rng, int n_boxes, std::size_t loose_points)
{
  BoundScene scene;
  const double centers_x[4] = {6.0, 18.0, 40.0, 72.0};
  for (int b = 0; b < n_boxes; ++b) {
    Box3D box;
    box.cx = centers_x[b % 4];
    box.cy = (b % 2 == 0) ? 3.0 : -3.0;
    box.cz = rng.uniform(-1.0, 0.5);
    box.length = rng.uniform(2.5, 4.5);
    box.width = rng.uniform(1.2, 2.0);
    box.height = rng.uniform(1.2, 1.8);
    box.yaw = rng.uniform(-M_PI, M_PI);
    scene.boxes.push_back(box);

    const double c = std::cos(box.yaw);
    const double s = std::sin(box.yaw);
    const std::size_t cluster = 30 + rng.below(50);
    for (std::size_t i = 0; i < cluster; ++i) {
      const double lx = rng.uniform(-0.45, 0.45) * box.length;
      const double ly = rng.uniform(-0.45, 0.45) * box.width;
      const double lz = rng.uniform(-0.45, 0.45) * box.height;
      Point p;
      p.x = static_cast<float>(box.cx + c * lx - s * ly);
      p.y = static_cast<float>(box.cy + s * lx + c * ly);
      p.z = static_cast<float>(box.cz + lz);
      p.intensity = static_cast<float>(rng.uniform01());
      scene.cloud.points.push_back(p);
    }
  }
  for (std::size_t i = 0; i < loose_points; ++i) {
    Point p;
    // large coordinates stress float rounding of the applied shifts
    p.x = static_cast<float>(rng.uniform(-110.0, 110.0));
    p.y = static_cast<float>(rng.uniform(-110.0, 110.0));
    p.z = static_cast<float>(rng.uniform(-4.0, 4.0));
    p.intensity = static_cast<float>(rng.uniform01());
    scene.cloud.points.push_back(p);
  }
  scene.cloud.frame_id = "bound";
  return scene;
}

// ---------------------------------------------------------------------------
// criterion 1: displacement bound, asserted exactly
// ---------------------------------------------------------------------------
bool criterion_1()
{
  const auto start = std::chrono::steady_clock::now();
  Criterion c(1, "per-point displacement never exceeds the (scaled) bound");
  SeededRng rng(1001u);
  const double bound = 0.02;
  const perturb::DistancePrecisionProfile profile =
    perturb::DistancePrecisionProfile::defaults();

  using perturb::PerturbationKind;
  const PerturbationKind kinds[7] = {
    PerturbationKind::RangeGlobal,       PerturbationKind::RangeLocal,
    PerturbationKind::RangeDirectional,  PerturbationKind::FalsePositive,
    PerturbationKind::ReflectivityDecrease, PerturbationKind::ReflectivityIncrease,
    PerturbationKind::DistanceAmplified};
  const perturb::Distribution dists[3] = {
    perturb::Distribution::Uniform, perturb::Distribution::Gaussian,
    perturb::Distribution::Laplacian};

  for (int iter = 0; iter < 10000; ++iter) {
    const PerturbationKind kind = kinds[iter % 7];
    const BoundScene scene = make_bound_scene(rng, 1 + static_cast<int>(rng.below(3)), 40);

    perturb::PerturbationSpec spec;
    spec.kind = kind;
    spec.seed = 5000 + static_cast<std::uint64_t>(iter);
    spec.bound = bound;
    if (kind == PerturbationKind::DistanceAmplified) {
      spec.distribution = perturb::Distribution::Uniform;
    } else if (
      kind == PerturbationKind::RangeGlobal || kind == PerturbationKind::RangeLocal ||
      kind == PerturbationKind::RangeDirectional) {
      spec.distribution = dists[iter % 3];
    }
    if (kind == PerturbationKind::RangeDirectional) {
      spec.direction = static_cast<perturb::Direction>(iter % 6);
    }

    // per-point allowance: the global kind may move anything by <= bound,
    // box-scoped kinds only their box members (possibly profile-scaled)
    std::vector<double> allowed(scene.cloud.size(), 0.0);
    if (kind == PerturbationKind::RangeGlobal) {
      std::fill(allowed.begin(), allowed.end(), bound);
    } else {
      for (const Box3D & box : scene.boxes) {
        const double eff = kind == PerturbationKind::DistanceAmplified
                             ? bound * profile.scale_at(box.range_xy())
                             : bound;
        for (std::size_t i : geometry::points_in_box(scene.cloud, box).indices) {
          allowed[i] = std::max(allowed[i], eff);
        }
      }
    }

    perturb::PerturbationOutcome out;
    switch (kind) {
      case PerturbationKind::RangeGlobal:
        out = perturb::perturb_range_global(scene.cloud, spec);
        break;
      case PerturbationKind::RangeLocal:
        out = perturb::perturb_range_local(scene.cloud, scene.boxes, spec);
        break;
      case PerturbationKind::RangeDirectional:
        out = perturb::perturb_range_directional(scene.cloud, scene.boxes, spec);
        break;
      case PerturbationKind::FalsePositive:
        out = perturb::perturb_false_positive(scene.cloud, &scene.boxes, spec);
        break;
      case PerturbationKind::ReflectivityDecrease:
      case PerturbationKind::ReflectivityIncrease:
        out = perturb::perturb_reflectivity(scene.cloud, scene.boxes, spec);
        break;
      case PerturbationKind::DistanceAmplified:
        out = perturb::perturb_distance_amplified(scene.cloud, scene.boxes, spec, profile);
        break;
    }

    if (out.removed.empty() && out.added_count == 0) {
      // index-aligned: check every point against its allowance, exactly
      for (std::size_t i = 0; i < scene.cloud.size(); ++i) {
        const double shift = shift_norm(scene.cloud.points[i], out.cloud.points[i]);
        if (shift > allowed[i]) {
          c.expect(
            false, "iter " + std::to_string(iter) + " point " + std::to_string(i) + " moved " +
                     fmt(shift) + " > allowed " + fmt(allowed[i]));
        }
      }
    } else {
      // removal/addition kinds never move surviving points
      std::size_t cursor = 0;
      std::size_t out_idx = 0;
      for (std::size_t i = 0; i < scene.cloud.size(); ++i) {
        if (cursor < out.removed.indices.size() && out.removed.indices[cursor] == i) {
          ++cursor;
          continue;
        }
        c.expect(
          bit_equal(scene.cloud.points[i], out.cloud.points[out_idx]),
          "iter " + std::to_string(iter) + ": surviving point " + std::to_string(i) + " changed");
        ++out_idx;
      }
      // synthesized points stay within the jitter bound of some source
      for (std::size_t a = out_idx; a < out.cloud.size(); ++a) {
        double nearest = 1e18;
        for (const Box3D & box : scene.boxes) {
          for (std::size_t i : geometry::points_in_box(scene.cloud, box).indices) {
            nearest = std::min(nearest, shift_norm(scene.cloud.points[i], out.cloud.points[a]));
          }
        }
        c.expect(
          nearest <= bound,
          "iter " + std::to_string(iter) + ": added point " + fmt(nearest) + " from any source");
      }
    }
  }

  const double elapsed =
    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  c.expect(elapsed < 30.0, "runtime " + fmt(elapsed) + " s exceeds the 30 s budget");
  return c.report(elapsed);
}

// ---------------------------------------------------------------------------
// criterion 2: scope safety, bit-exact outside the target boxes
// ---------------------------------------------------------------------------
bool criterion_2()
{
  const auto start = std::chrono::steady_clock::now();
  Criterion c(2, "points outside target boxes are bit-identical");
  SeededRng rng(2002u);

  using perturb::PerturbationKind;
  for (int iter = 0; iter < 100; ++iter) {
    const BoundScene scene = make_bound_scene(rng, 2 + static_cast<int>(rng.below(2)), 400);
    std::vector<bool> in_any(scene.cloud.size(), false);
    for (const Box3D & box : scene.boxes) {
      for (std::size_t i : geometry::points_in_box(scene.cloud, box).indices) {
        in_any[i] = true;
      }
    }

    for (int k = 0; k < 6; ++k) {
      perturb::PerturbationSpec spec;
      spec.seed = 9000 + static_cast<std::uint64_t>(iter * 10 + k);
      perturb::PerturbationOutcome out;
      switch (k) {
        case 0:
          spec.kind = PerturbationKind::RangeLocal;
          spec.distribution = perturb::Distribution::Gaussian;
          out = perturb::perturb_range_local(scene.cloud, scene.boxes, spec);
          break;
        case 1:
          spec.kind = PerturbationKind::RangeDirectional;
          spec.distribution = perturb::Distribution::Laplacian;
          spec.direction = perturb::Direction::NegY;
          out = perturb::perturb_range_directional(scene.cloud, scene.boxes, spec);
          break;
        case 2:
          spec.kind = PerturbationKind::DistanceAmplified;
          spec.distribution = perturb::Distribution::Uniform;
          out = perturb::perturb_distance_amplified(
            scene.cloud, scene.boxes, spec, perturb::DistancePrecisionProfile::defaults());
          break;
        case 3:
          spec.kind = PerturbationKind::ReflectivityDecrease;
          out = perturb::perturb_reflectivity(scene.cloud, scene.boxes, spec);
          break;
        case 4:
          spec.kind = PerturbationKind::ReflectivityIncrease;
          out = perturb::perturb_reflectivity(scene.cloud, scene.boxes, spec);
          break;
        case 5:
          spec.kind = PerturbationKind::FalsePositive;
          spec.removal_rate = 0.01;  // aggressive so removals occur in-scope
          out = perturb::perturb_false_positive(scene.cloud, &scene.boxes, spec);
          break;
      }

      for (std::size_t i : out.removed.indices) {
        c.expect(in_any[i], "kind " + std::to_string(k) + " removed an out-of-scope point");
      }
      // map surviving output positions back to originals
      std::size_t cursor = 0;
      std::size_t out_idx = 0;
      for (std::size_t i = 0; i < scene.cloud.size(); ++i) {
        if (cursor < out.removed.indices.size() && out.removed.indices[cursor] == i) {
          ++cursor;
          continue;
        }
        if (!in_any[i]) {
          c.expect(
            bit_equal(scene.cloud.points[i], out.cloud.points[out_idx]),
            "kind " + std::to_string(k) + " touched out-of-scope point " + std::to_string(i));
        }
        ++out_idx;
      }
    }
  }
  const double elapsed =
    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return c.report(elapsed);
}

// ---------------------------------------------------------------------------
// criterion 3: reflectivity/false-positive count contracts
// ---------------------------------------------------------------------------
bool criterion_3()
{
  const auto start = std::chrono::steady_clock::now();
  Criterion c(3, "count contracts: round(0.60k), round(0.67k), binomial removals");
  SeededRng rng(3003u);

  // exact per-box counts across awkward k values
  for (std::size_t k : {1u, 2u, 3u, 5u, 10u, 33u, 99u, 100u, 101u, 500u}) {
    PointCloud cloud;
    Box3D box;
    box.cx = 10;
    box.cy = 0;
    box.cz = 0;
    box.length = 4;
    box.width = 2;
    box.height = 2;
    box.yaw = 0.3;
    const double cs = std::cos(box.yaw);
    const double sn = std::sin(box.yaw);
    for (std::size_t i = 0; i < k; ++i) {
      const double lx = rng.uniform(-0.4, 0.4) * box.length;
      const double ly = rng.uniform(-0.4, 0.4) * box.width;
      const double lz = rng.uniform(-0.4, 0.4) * box.height;
      Point p;
      p.x = static_cast<float>(box.cx + cs * lx - sn * ly);
      p.y = static_cast<float>(box.cy + sn * lx + cs * ly);
      p.z = static_cast<float>(box.cz + lz);
      cloud.points.push_back(p);
    }

    perturb::PerturbationSpec dec;
    dec.kind = perturb::PerturbationKind::ReflectivityDecrease;
    dec.seed = k;
    const auto dec_out = perturb::perturb_reflectivity(cloud, {box}, dec);
    const auto expect_removed =
      static_cast<std::size_t>(std::llround(0.60 * static_cast<double>(k)));
    c.expect(
      dec_out.removed.size() == expect_removed,
      "decrease k=" + std::to_string(k) + " removed " + std::to_string(dec_out.removed.size()) +
        " != " + std::to_string(expect_removed));

    perturb::PerturbationSpec inc;
    inc.kind = perturb::PerturbationKind::ReflectivityIncrease;
    inc.seed = k;
    const auto inc_out = perturb::perturb_reflectivity(cloud, {box}, inc);
    const auto expect_added =
      static_cast<std::size_t>(std::llround(0.67 * static_cast<double>(k)));
    c.expect(
      inc_out.added_count == expect_added,
      "increase k=" + std::to_string(k) + " added " + std::to_string(inc_out.added_count) +
        " != " + std::to_string(expect_added));
  }

  // binomial false-positive contract: n=120000, p=1e-4 -> mean 12
  PointCloud big;
  big.points.resize(120000);
  SeededRng fill(77u);
  for (Point & p : big.points) {
    p.x = static_cast<float>(fill.uniform(-60, 60));
    p.y = static_cast<float>(fill.uniform(-60, 60));
    p.z = static_cast<float>(fill.uniform(-3, 3));
  }
  double total_removed = 0.0;
  for (int run = 0; run < 100; ++run) {
    perturb::PerturbationSpec fp;
    fp.kind = perturb::PerturbationKind::FalsePositive;
    fp.seed = 40000 + static_cast<std::uint64_t>(run);
    const auto out = perturb::perturb_false_positive(big, nullptr, fp);
    total_removed += static_cast<double>(out.removed.size());
  }
  const double mean = total_removed / 100.0;
  const double sigma = std::sqrt(120000.0 * 1e-4 * (1.0 - 1e-4));
  const double margin = 4.0 * sigma / std::sqrt(100.0);
  c.expect(
    std::abs(mean - 12.0) <= margin,
    "false-positive mean " + fmt(mean) + " outside 12 +- " + fmt(margin));

  const double elapsed =
    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return c.report(elapsed);
}

// ---------------------------------------------------------------------------
// criterion 4: IoU against Monte-Carlo and closed-form oracles
// ---------------------------------------------------------------------------
bool criterion_4()
{
  const auto start = std::chrono::steady_clock::now();
  Criterion c(4, "iou_3d within 0.01 of Monte-Carlo, exact on axis-aligned cases");
  SeededRng rng(4004u);

  // closed-form axis-aligned oracle
  auto analytic_aligned = [](const Box3D & a, const Box3D & b) {
    auto overlap = [](double ca, double ea, double cb, double eb) {
      const double lo = std::max(ca - ea / 2, cb - eb / 2);
      const double hi = std::min(ca + ea / 2, cb + eb / 2);
      return std::max(0.0, hi - lo);
    };
    const double inter = overlap(a.cx, a.length, b.cx, b.length) *
                         overlap(a.cy, a.width, b.cy, b.width) *
                         overlap(a.cz, a.height, b.cz, b.height);
    const double uni = a.volume() + b.volume() - inter;
    return uni <= 0 ? 0.0 : inter / uni;
  };

  for (int i = 0; i < 300; ++i) {
    Box3D a = testutil::random_box(rng, 1.5);
    Box3D b = testutil::random_box(rng, 1.5);
    a.yaw = 0.0;
    b.yaw = 0.0;
    const double got = geometry::iou_3d(a, b);
    const double want = analytic_aligned(a, b);
    c.expect(
      std::abs(got - want) <= 1e-9,
      "aligned pair " + std::to_string(i) + ": " + fmt(got) + " vs " + fmt(want));
  }
  {
    Box3D unit;
    unit.length = unit.width = unit.height = 1.0;
    Box3D off = unit;
    off.cx = 0.5;
    c.expect(std::abs(geometry::iou_3d(unit, off) - 1.0 / 3.0) <= 1e-9, "offset cube != 1/3");
    c.expect(geometry::iou_3d(unit, unit) == 1.0, "identity != 1");
  }

  // Monte-Carlo oracle on rotated pairs: sample uniformly inside the
  // smaller box, estimate the intersection volume
  for (int pair = 0; pair < 500; ++pair) {
    Box3D a = testutil::random_box(rng, 1.2);
    Box3D b = testutil::random_box(rng, 1.2);
    if (a.volume() > b.volume()) {
      std::swap(a, b);
    }
    const double got = geometry::iou_3d(a, b);

    const double ca = std::cos(a.yaw);
    const double sa = std::sin(a.yaw);
    const double cb = std::cos(b.yaw);
    const double sb = std::sin(b.yaw);
    const std::size_t n = 1000000;
    std::size_t hits = 0;
    for (std::size_t s = 0; s < n; ++s) {
      const double lx = (rng.uniform01() - 0.5) * a.length;
      const double ly = (rng.uniform01() - 0.5) * a.width;
      const double lz = (rng.uniform01() - 0.5) * a.height;
      const double px = a.cx + ca * lx - sa * ly;
      const double py = a.cy + sa * lx + ca * ly;
      const double pz = a.cz + lz;
      const double dx = px - b.cx;
      const double dy = py - b.cy;
      const double bx = cb * dx + sb * dy;
      const double by = -sb * dx + cb * dy;
      if (
        std::abs(bx) <= 0.5 * b.length && std::abs(by) <= 0.5 * b.width &&
        std::abs(pz - b.cz) <= 0.5 * b.height) {
        ++hits;
      }
    }
    const double inter = a.volume() * static_cast<double>(hits) / static_cast<double>(n);
    const double mc = inter / (a.volume() + b.volume() - inter);
    c.expect(
      std::abs(got - mc) <= 0.01,
      "pair " + std::to_string(pair) + ": iou " + fmt(got) + " vs MC " + fmt(mc));
  }

  const double elapsed =
    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  c.expect(elapsed < 120.0, "runtime " + fmt(elapsed) + " s exceeds the 2 min budget");
  return c.report(elapsed);
}

// ---------------------------------------------------------------------------
// criterion 5: points_in_box equals the corner-plane half-space oracle
// ---------------------------------------------------------------------------
bool criterion_5()
{
  const auto start = std::chrono::steady_clock::now();
  Criterion c(5, "points_in_box equals the half-space oracle, exactly");
  SeededRng rng(5005u);

  for (int pair = 0; pair < 1000; ++pair) {
    const Box3D box = testutil::random_box(rng, 4.0);
    const PointCloud cloud = testutil::random_cloud(rng, 300, 7.0);

    const auto corners = geometry::box_corners(box);
    const Eigen::Vector3d center = (corners[0] + corners[6]) * 0.5;
    const Eigen::Vector3d axes[3] = {
      (corners[0] - corners[1]).normalized(),
      (corners[0] - corners[3]).normalized(),
      (corners[4] - corners[0]).normalized(),
    };
    double half[3];
    for (int k = 0; k < 3; ++k) {
      half[k] = std::abs(axes[k].dot(corners[0] - center));
    }

    const PointIndexSet got = geometry::points_in_box(cloud, box);
    std::vector<std::size_t> want;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const Eigen::Vector3d q(cloud.points[i].x, cloud.points[i].y, cloud.points[i].z);
      bool inside = true;
      for (int k = 0; k < 3; ++k) {
        inside = inside && std::abs(axes[k].dot(q - center)) <= half[k];
      }
      if (inside) {
        want.push_back(i);
      }
    }
    c.expect(
      got.indices == want, "pair " + std::to_string(pair) + ": sets differ (" +
                             std::to_string(got.size()) + " vs " + std::to_string(want.size()) +
                             ")");
  }
  const double elapsed =
    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return c.report(elapsed);
}

// ---------------------------------------------------------------------------
// criterion 6: greedy matching equals exhaustive optimal assignment
// ---------------------------------------------------------------------------
struct BruteBest
{
  double total = 0.0;
  std::vector<std::pair<int, std::size_t>> pairs;  // (gt_id, det index)
};

void brute_recurse(
  const std::vector<std::vector<double>> & iou, const std::vector<metrics::GtObject> & gts,
  std::size_t g, std::vector<bool> & used, std::vector<std::pair<int, std::size_t>> & cur,
  double total, BruteBest & best)
{
  if (g == iou.size()) {
    if (
      total > best.total + 1e-12 ||
      (std::abs(total - best.total) <= 1e-12 && cur.size() > best.pairs.size())) {
      best.total = total;
      best.pairs = cur;
    }
    return;
  }
  brute_recurse(iou, gts, g + 1, used, cur, total, best);
  for (std::size_t d = 0; d < used.size(); ++d) {
    if (!used[d] && iou[g][d] > 0.0) {
      used[d] = true;
      cur.emplace_back(gts[g].gt_id, d);
      brute_recurse(iou, gts, g + 1, used, cur, total + iou[g][d], best);
      cur.pop_back();
      used[d] = false;
    }
  }
}

bool criterion_6()
{
  const auto start = std::chrono::steady_clock::now();
  Criterion c(6, "greedy matcher equals brute-force optimal assignment");
  SeededRng rng(6006u);
  const metrics::MatchThresholds thresholds;

  int cases = 0;
  while (cases < 10000) {
    const int n_gt = 1 + static_cast<int>(rng.below(4));
    std::vector<metrics::GtObject> gts;
    for (int g = 0; g < n_gt; ++g) {
      Box3D box;
      box.cx = 9.0 * g;
      box.cy = rng.uniform(-1.5, 1.5);
      box.cz = rng.uniform(-0.5, 0.5);
      box.length = rng.uniform(3.2, 4.6);
      box.width = rng.uniform(1.4, 1.9);
      box.height = rng.uniform(1.3, 1.8);
      box.yaw = rng.uniform(-M_PI, M_PI);
      gts.push_back({g, g % 4 == 3 ? ObjectClass::Pedestrian : ObjectClass::Car, box});
    }

    std::vector<DetectionRecord> dets;
    for (int g = 0; g < n_gt && dets.size() < 4; ++g) {
      if (rng.uniform01() < 0.75) {
        DetectionRecord det;
        det.box = gts[g].box;
        det.box.cx += rng.uniform(-0.6, 0.6);
        det.box.cy += rng.uniform(-0.6, 0.6);
        det.box.yaw = geometry::normalize_yaw(det.box.yaw + rng.uniform(-0.2, 0.2));
        det.score = rng.uniform01();
        det.object_class = gts[g].object_class;
        dets.push_back(det);
      }
      if (rng.uniform01() < 0.2 && dets.size() < 4) {
        DetectionRecord dup;
        dup.box = gts[g].box;
        dup.box.cx += rng.uniform(-1.2, 1.2);
        dup.score = rng.uniform01();
        dup.object_class = gts[g].object_class;
        dets.push_back(dup);
      }
    }
    ++cases;

    std::vector<std::vector<double>> iou(n_gt, std::vector<double>(dets.size(), 0.0));
    for (int g = 0; g < n_gt; ++g) {
      for (std::size_t d = 0; d < dets.size(); ++d) {
        const double v = geometry::iou_3d(gts[g].box, dets[d].box);
        iou[g][d] = v >= thresholds.match_iou ? v : 0.0;
      }
    }
    BruteBest best;
    std::vector<bool> used(dets.size(), false);
    std::vector<std::pair<int, std::size_t>> cur;
    brute_recurse(iou, gts, 0, used, cur, 0.0, best);

    const auto greedy = metrics::match_to_ground_truth(gts, dets, thresholds);

    std::set<std::pair<int, std::string>> greedy_set;
    double greedy_total = 0.0;
    for (const auto & m : greedy) {
      greedy_total += m.iou_with_gt;
      greedy_set.insert({m.gt_id, fmt(m.box.cx) + "/" + fmt(m.box.cy)});
    }
    std::set<std::pair<int, std::string>> brute_set;
    for (const auto & [gt_id, det_idx] : best.pairs) {
      brute_set.insert({gt_id, fmt(dets[det_idx].box.cx) + "/" + fmt(dets[det_idx].box.cy)});
    }

    c.expect(
      greedy_set == brute_set && std::abs(greedy_total - best.total) <= 1e-9,
      "case " + std::to_string(cases) + ": greedy and optimal assignments differ (" +
        std::to_string(greedy.size()) + " vs " + std::to_string(best.pairs.size()) + " pairs)");
  }

  const double elapsed =
    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return c.report(elapsed);
}

// ---------------------------------------------------------------------------
// criterion 7: self-evaluation identities and the strict LDC boundary
// ---------------------------------------------------------------------------
bool criterion_7()
{
  const auto start = std::chrono::steady_clock::now();
  Criterion c(7, "evaluate(baseline, baseline) is zero; LDC boundary is strict");

  testutil::TempDir tmp("accept7");
  const auto dataset = tmp.path() / "dataset";
  const testutil::SyntheticScene scene = testutil::make_scene(700u, 4, 140, 900);
  testutil::write_dataset_frame(dataset, "000000", scene);

  pipeline::RunConfig config = pipeline::run_config_from_json_text("{}", "<accept>");
  config.dataset_root = dataset;

  PointCloud cloud = scene.cloud;
  cloud.frame_id = "000000";
  std::vector<metrics::GtObject> gts;
  for (std::size_t i = 0; i < scene.lidar_boxes.size(); ++i) {
    gts.push_back({scene.labels[i].gt_id, scene.labels[i].object_class, scene.lidar_boxes[i]});
  }
  const auto dets = mock_detector::detect(cloud, gts, config.mock);
  c.expect(!dets.empty(), "mock detector returned nothing");

  const auto eval = pipeline::evaluate_detections(config, "self", dets, dets);
  c.expect(eval.report.ldc.count == 0, "self LDC != 0");
  c.expect(eval.report.diff.count == 0, "self DIFF != 0");
  c.expect(eval.report.diff.lost == 0 && eval.report.diff.gained == 0, "self lost/gained != 0");
  c.expect(
    eval.report.median_dx == 0.0 && eval.report.median_dy == 0.0 &&
      eval.report.median_dz == 0.0 && eval.report.median_dsize == 0.0 &&
      eval.report.median_diou == 0.0,
    "self medians != 0");

  metrics::DeviationRecord at_boundary;
  at_boundary.dx = 0.1;  // exactly the threshold: strict >, not counted
  metrics::DeviationRecord above;
  above.dx = std::nextafter(0.1, 1.0);
  const auto counted = metrics::large_deviation_count({at_boundary, above}, 0.1);
  c.expect(counted.count == 1, "strict-threshold boundary miscounted");

  const double elapsed =
    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return c.report(elapsed);
}

// ---------------------------------------------------------------------------
// criterion 8: end-to-end mock pipeline equals an independent oracle
// ---------------------------------------------------------------------------
bool criterion_8()
{
  const auto start = std::chrono::steady_clock::now();
  Criterion c(8, "mock pipeline: DIFF > 0 and evaluate equals the scripted oracle");

  testutil::TempDir tmp("accept8");
  const auto dataset = tmp.path() / "dataset";

  // per-frame obstacle point populations straddle the detector floor (20):
  // the 30-point obstacles drop below it after the 60% reduction
  std::map<std::string, testutil::SyntheticScene> scenes;
  scenes["000000"] = testutil::make_scene_with_counts(800u, {30, 120, 30, 150, 120}, 700);
  scenes["000001"] = testutil::make_scene_with_counts(802u, {90, 30, 90}, 800);
  for (const auto & [frame, scene] : scenes) {
    testutil::write_dataset_frame(dataset, frame, scene);
  }

  pipeline::RunConfig config = pipeline::run_config_from_json_text("{}", "<accept>");
  config.dataset_root = dataset;
  config.output_root = tmp.path() / "out";
  config.parallelism = 2;

  const auto batch = pipeline::cmd_perturb(config, {});
  c.expect(batch.errors.empty(), "perturb batch reported errors");

  // run the mock detector over original and reflectivity-decreased clouds
  std::vector<DetectionRecord> baseline;
  std::vector<DetectionRecord> perturbed;
  for (const auto & [frame, scene] : scenes) {
    std::vector<metrics::GtObject> gts;
    for (std::size_t i = 0; i < scene.lidar_boxes.size(); ++i) {
      gts.push_back({scene.labels[i].gt_id, scene.labels[i].object_class, scene.lidar_boxes[i]});
    }
    PointCloud cloud = scene.cloud;
    cloud.frame_id = frame;
    for (const auto & det : mock_detector::detect(cloud, gts, config.mock)) {
      baseline.push_back(det);
    }
    PointCloud reduced = pcd_io::read_pointcloud(
      config.output_root / "reflectivity_decrease" / (frame + ".bin"));
    reduced.frame_id = frame;
    for (const auto & det : mock_detector::detect(reduced, gts, config.mock)) {
      perturbed.push_back(det);
    }
  }

  const auto eval =
    pipeline::evaluate_detections(config, "reflectivity_decrease", baseline, perturbed);
  c.expect(eval.report.diff.count > 0, "reflectivity decrease produced no DIFF");

  // ----- independent oracle: brute-force matching + hand metric math -----
  auto detect_floor = [&](ObjectClass cls) {
    return cls == ObjectClass::Car ? config.thresholds.detect_iou_car
                                   : config.thresholds.detect_iou_ped_cyc;
  };
  struct OracleMatch
  {
    double iou;
    Box3D box;
    bool detected;
  };
  auto oracle_match = [&](
                        const testutil::SyntheticScene & scene,
                        const std::vector<DetectionRecord> & dets) {
    std::vector<metrics::GtObject> gts;
    for (std::size_t i = 0; i < scene.lidar_boxes.size(); ++i) {
      gts.push_back({scene.labels[i].gt_id, scene.labels[i].object_class, scene.lidar_boxes[i]});
    }
    std::vector<std::vector<double>> iou(gts.size(), std::vector<double>(dets.size(), 0.0));
    for (std::size_t g = 0; g < gts.size(); ++g) {
      for (std::size_t d = 0; d < dets.size(); ++d) {
        const double v = geometry::iou_3d(gts[g].box, dets[d].box);
        iou[g][d] = v >= config.thresholds.match_iou ? v : 0.0;
      }
    }
    BruteBest best;
    std::vector<bool> used(dets.size(), false);
    std::vector<std::pair<int, std::size_t>> cur;
    brute_recurse(iou, gts, 0, used, cur, 0.0, best);

    std::map<int, OracleMatch> by_id;
    for (const auto & [gt_id, det_idx] : best.pairs) {
      const auto g = static_cast<std::size_t>(gt_id);
      by_id[gt_id] = {iou[g][det_idx], dets[det_idx].box,
                      iou[g][det_idx] >= detect_floor(gts[g].object_class)};
    }
    return by_id;
  };

  std::vector<double> odx, ody, odz, odsize, odiou;  // oracle records
  std::size_t oracle_base_detected = 0;
  std::size_t oracle_pert_detected = 0;
  std::size_t oracle_lost = 0;
  std::size_t oracle_gained = 0;
  for (const auto & [frame, scene] : scenes) {
    std::vector<DetectionRecord> base_f, pert_f;
    for (const auto & d : baseline) {
      if (d.frame_id == frame) {
        base_f.push_back(d);
      }
    }
    for (const auto & d : perturbed) {
      if (d.frame_id == frame) {
        pert_f.push_back(d);
      }
    }
    const auto base_m = oracle_match(scene, base_f);
    const auto pert_m = oracle_match(scene, pert_f);
    for (const auto & [id, m] : base_m) {
      oracle_base_detected += m.detected ? 1 : 0;
      auto it = pert_m.find(id);
      if (it != pert_m.end()) {
        odx.push_back(std::abs(it->second.box.cx - m.box.cx));
        ody.push_back(std::abs(it->second.box.cy - m.box.cy));
        odz.push_back(std::abs(it->second.box.cz - m.box.cz));
        odsize.push_back(std::abs(it->second.box.volume() - m.box.volume()));
        odiou.push_back(std::abs(it->second.iou - m.iou));
      }
      if (m.detected && (it == pert_m.end() || !it->second.detected)) {
        ++oracle_lost;
      }
    }
    for (const auto & [id, m] : pert_m) {
      oracle_pert_detected += m.detected ? 1 : 0;
      auto it = base_m.find(id);
      if (m.detected && (it == base_m.end() || !it->second.detected)) {
        ++oracle_gained;
      }
    }
  }

  // oracle LDC + medians over large deviations (strict 0.1 m)
  std::size_t oracle_ldc = 0;
  std::vector<double> ldx, ldy, ldz, ldsize, ldiou;
  for (std::size_t i = 0; i < odx.size(); ++i) {
    if (std::max(odx[i], std::max(ody[i], odz[i])) > config.ldc_threshold) {
      ++oracle_ldc;
      ldx.push_back(odx[i]);
      ldy.push_back(ody[i]);
      ldz.push_back(odz[i]);
      ldsize.push_back(odsize[i]);
      ldiou.push_back(odiou[i]);
    }
  }
  auto oracle_median = [](std::vector<double> v) {
    if (v.empty()) {
      return 0.0;
    }
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };

  c.expect(
    eval.report.record_count == odx.size(),
    "record count " + std::to_string(eval.report.record_count) + " != oracle " +
      std::to_string(odx.size()));
  c.expect(
    eval.report.ldc.count == oracle_ldc,
    "LDC " + std::to_string(eval.report.ldc.count) + " != oracle " + std::to_string(oracle_ldc));
  c.expect(
    eval.report.baseline_detected == oracle_base_detected,
    "baseline detected mismatch vs oracle");
  c.expect(eval.report.diff.lost == oracle_lost, "DIFF lost mismatch vs oracle");
  c.expect(eval.report.diff.gained == oracle_gained, "DIFF gained mismatch vs oracle");
  const auto oracle_net = static_cast<long long>(oracle_base_detected) -
                          static_cast<long long>(oracle_pert_detected);
  c.expect(eval.report.diff.net == oracle_net, "DIFF net mismatch vs oracle");
  c.expect(
    std::abs(eval.report.median_dx - oracle_median(ldx)) <= 1e-9 &&
      std::abs(eval.report.median_dy - oracle_median(ldy)) <= 1e-9 &&
      std::abs(eval.report.median_dz - oracle_median(ldz)) <= 1e-9 &&
      std::abs(eval.report.median_dsize - oracle_median(ldsize)) <= 1e-9 &&
      std::abs(eval.report.median_diou - oracle_median(ldiou)) <= 1e-9,
    "large-deviation medians differ from the oracle");

  const double elapsed =
    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return c.report(elapsed);
}

// ---------------------------------------------------------------------------
// criterion 9: cascade identities on the built-in predictor
// ---------------------------------------------------------------------------
bool criterion_9()
{
  const auto start = std::chrono::steady_clock::now();
  Criterion c(9, "cascade identities: offset transfer, zero baseline, RemoveOnce");
  const cascade::Predictor predictor = [](const Track & t, double h, double dt) {
    return cascade::predict_constant_velocity(t, h, dt);
  };

  SeededRng rng(9009u);
  for (int trial = 0; trial < 50; ++trial) {
    Track track;
    track.obstacle_id = trial;
    const double x0 = rng.uniform(-10, 10);
    const double vx = rng.uniform(-5, 5);
    const double y0 = rng.uniform(-10, 10);
    const double vy = rng.uniform(-5, 5);
    for (int i = 0; i < 12; ++i) {
      const double t = 0.1 * i;
      track.samples.push_back({t, x0 + vx * t, y0 + vy * t});
    }
    const double d = rng.uniform(0.01, 0.5);

    cascade::PerturbationPattern all;
    all.kind = cascade::PerturbationPattern::Kind::All;
    all.dx = d;
    const auto base = predictor(track, 1.0, 0.1);
    const auto dev = predictor(cascade::apply_pattern(track, all), 1.0, 0.1);
    const auto s = cascade::displacement_scores(base, dev);
    c.expect(std::abs(s.ade_x - d) <= 1e-9, "All ade_x " + fmt(s.ade_x) + " != " + fmt(d));
    c.expect(std::abs(s.fde_x - d) <= 1e-9, "All fde_x " + fmt(s.fde_x) + " != " + fmt(d));
    c.expect(s.ade_y <= 1e-9, "All leaked into y");
  }

  // zero baseline row straight from run_cascade
  std::vector<cascade::XyDeviation> deviations;
  for (int i = 0; i < 30; ++i) {
    deviations.push_back({rng.gaussian(0.2), rng.gaussian(0.2)});
  }
  std::vector<Track> tracks;
  for (int k = 0; k < 3; ++k) {
    Track t;
    t.obstacle_id = k;
    for (int i = 0; i < 10; ++i) {
      t.samples.push_back({0.1 * i, 2.0 * k + 0.5 * i * 0.1, -1.0 + 0.02 * i});
    }
    tracks.push_back(t);
  }
  std::vector<cascade::PerturbationPattern> patterns(3);
  patterns[0].kind = cascade::PerturbationPattern::Kind::Interval;
  patterns[1].kind = cascade::PerturbationPattern::Kind::All;
  patterns[2].kind = cascade::PerturbationPattern::Kind::RemoveOnce;
  const auto table = cascade::run_cascade(
    tracks, cascade::build_stat_offsets(deviations), patterns, predictor, 1.0, 0.1);
  c.expect(table.rows[0].offset.is_baseline, "first row is not the baseline");
  for (const auto & s : table.rows[0].per_pattern) {
    c.expect(
      s.ade_x == 0.0 && s.ade_y == 0.0 && s.fde_x == 0.0 && s.fde_y == 0.0,
      "baseline row is not all zeros");
  }

  // RemoveOnce on a constant-position track
  Track constant;
  constant.obstacle_id = 99;
  for (int i = 0; i < 10; ++i) {
    constant.samples.push_back({0.1 * i, 4.0, -2.0});
  }
  cascade::PerturbationPattern remove_once;
  remove_once.kind = cascade::PerturbationPattern::Kind::RemoveOnce;
  const auto base = predictor(constant, 1.0, 0.1);
  const auto dev = predictor(cascade::apply_pattern(constant, remove_once), 1.0, 0.1);
  const auto s = cascade::displacement_scores(base, dev);
  c.expect(
    s.ade_x == 0.0 && s.ade_y == 0.0 && s.fde_x == 0.0 && s.fde_y == 0.0,
    "RemoveOnce moved a constant-position prediction");

  const double elapsed =
    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return c.report(elapsed);
}

// ---------------------------------------------------------------------------
// criterion 10: quartile and fence formulas
// ---------------------------------------------------------------------------
bool criterion_10()
{
  const auto start = std::chrono::steady_clock::now();
  Criterion c(10, "Tukey fences: uf = q3 + 1.5 iqr, lf = q1 - 1.5 iqr");
  SeededRng rng(1010u);

  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> values;
    const std::size_t n = 1 + rng.below(100);
    for (std::size_t i = 0; i < n; ++i) {
      values.push_back(rng.laplacian(1.5));
    }
    const auto q = metrics::deviation_quartiles(values);
    c.expect(q.uf == q.q3 + 1.5 * q.iqr, "uf formula violated");
    c.expect(q.lf == q.q1 - 1.5 * q.iqr, "lf formula violated");
    c.expect(q.iqr == q.q3 - q.q1, "iqr formula violated");
    c.expect(
      q.lf <= q.q1 && q.q1 <= q.median && q.median <= q.q3 && q.q3 <= q.uf,
      "quartile ordering violated");
  }

  const auto fixture = metrics::deviation_quartiles({1, 2, 3, 4, 5});
  c.expect(fixture.q1 == 2.0, "fixture q1 " + fmt(fixture.q1));
  c.expect(fixture.median == 3.0, "fixture median " + fmt(fixture.median));
  c.expect(fixture.q3 == 4.0, "fixture q3 " + fmt(fixture.q3));
  c.expect(fixture.iqr == 2.0, "fixture iqr " + fmt(fixture.iqr));
  c.expect(fixture.uf == 7.0, "fixture uf " + fmt(fixture.uf));
  c.expect(fixture.lf == -1.0, "fixture lf " + fmt(fixture.lf));

  const double elapsed =
    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return c.report(elapsed);
}

// ---------------------------------------------------------------------------
// criterion 11: determinism across runs and worker counts; throughput
// ---------------------------------------------------------------------------
class DigestSink : public pipeline::PerturbSink
{
public:
  std::string write(
    const std::string & variant, const std::string & frame, const PointCloud & cloud) override
  {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const auto * bytes = reinterpret_cast<const unsigned char *>(cloud.points.data());
    for (std::size_t i = 0; i < cloud.points.size() * sizeof(Point); ++i) {
      h = (h ^ bytes[i]) * 0x100000001b3ULL;
    }
    std::lock_guard<std::mutex> lock(mutex_);
    digests_[variant + "/" + frame] = h;
    return "";
  }
  std::map<std::string, std::uint64_t> digests() const { return digests_; }

private:
  std::mutex mutex_;
  std::map<std::string, std::uint64_t> digests_;
};

bool criterion_11()
{
  const auto start = std::chrono::steady_clock::now();
  Criterion c(11, "byte-identical across reruns and worker counts; 100x110k frames under 60 s");

  // deterministic on-demand frames: ~110k points, 5 obstacles each
  const pipeline::FrameLoader loader = [](const std::string & frame_id) {
    const std::uint64_t seed = hash_combine(0xabcdefULL, frame_id);
    const testutil::SyntheticScene scene = testutil::make_scene(seed, 5, 2000, 100000);
    pipeline::FrameInputs inputs;
    inputs.cloud = scene.cloud;
    inputs.cloud.frame_id = frame_id;
    inputs.labels = scene.labels;
    inputs.calib = scene.calib;
    return inputs;
  };
  std::vector<std::string> frames;
  for (int i = 0; i < 100; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06d", i);
    frames.emplace_back(buf);
  }
  const perturb::SuiteConfig suite = perturb::SuiteConfig::default_suite(20260810);

  std::vector<std::map<std::string, std::uint64_t>> digests;
  for (const int workers : {1, 8, 1, 8}) {
    const auto pass_start = std::chrono::steady_clock::now();
    DigestSink sink;
    const auto result = pipeline::run_perturb_batch(frames, loader, suite, workers, sink);
    const double pass_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - pass_start).count();
    c.expect(result.errors.empty(), "batch errors with workers=" + std::to_string(workers));
    c.expect(
      result.entries.size() == frames.size() * suite.variants.size(),
      "entry count off with workers=" + std::to_string(workers));
    c.expect(
      pass_s < 60.0,
      "pass with workers=" + std::to_string(workers) + " took " + fmt(pass_s) + " s");
    digests.push_back(sink.digests());
  }
  for (std::size_t i = 1; i < digests.size(); ++i) {
    c.expect(digests[i] == digests[0], "digest set " + std::to_string(i) + " differs from run 0");
  }

  const double elapsed =
    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return c.report(elapsed);
}

// ---------------------------------------------------------------------------
// criterion 12: default suite cardinality
// ---------------------------------------------------------------------------
bool criterion_12()
{
  const auto start = std::chrono::steady_clock::now();
  Criterion c(12, "default suite emits exactly 15 variants per frame");

  const perturb::SuiteConfig suite = perturb::SuiteConfig::default_suite(1);
  c.expect(suite.variants.size() == 15, "suite lists " + std::to_string(suite.variants.size()));

  std::set<std::string> names;
  for (const auto & v : suite.variants) {
    names.insert(v.name);
  }
  c.expect(names.size() == 15, "variant names are not unique");

  const testutil::SyntheticScene scene = testutil::make_scene(1200u, 2, 80, 500);
  const auto results = perturb::build_suite(scene.cloud, scene.labels, scene.calib, suite);
  c.expect(results.size() == 15, "build_suite emitted " + std::to_string(results.size()));

  const double elapsed =
    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return c.report(elapsed);
}

}  // namespace

int main()
{
  bool all_pass = true;
  all_pass &= criterion_1();
  all_pass &= criterion_2();
  all_pass &= criterion_3();
  all_pass &= criterion_4();
  all_pass &= criterion_5();
  all_pass &= criterion_6();
  all_pass &= criterion_7();
  all_pass &= criterion_8();
  all_pass &= criterion_9();
  all_pass &= criterion_10();
  all_pass &= criterion_11();
  all_pass &= criterion_12();
  std::cout << (all_pass ? "acceptance: all criteria passed" : "acceptance: FAILURES above")
            << std::endl;
  return all_pass ? 0 : 1;
}
