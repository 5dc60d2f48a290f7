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

#ifndef SORBET__RANDOM_HPP_
#define SORBET__RANDOM_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace sorbet
{

/// Seeded RNG with hand-written transforms so a given seed produces the
/// same byte stream on every platform and standard library. Each sampler
/// consumes a fixed number of engine draws.
class SeededRng
{
public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1), 53 bits of mantissa. One engine draw.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi). One engine draw.
  double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

  /// Standard normal scaled by sigma, Box-Muller cosine branch.
  /// Two engine draws.
  double gaussian(double sigma)
  {
    const double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
    const double u2 = uniform01();
    return sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// Zero-mean Laplacian with scale b, by inverse CDF. One engine draw.
  double laplacian(double b)
  {
    const double v = uniform01() - 0.5;  // [-0.5, 0.5)
    double t = 1.0 - 2.0 * std::abs(v);
    if (t <= 0.0) {
      t = 0x1.0p-53;
    }
    return (v < 0.0 ? b : -b) * std::log(t);
  }

  /// Uniform integer in [0, n). One engine draw; the bias for n far below
  /// 2^53 is negligible and the mapping is frozen for reproducibility.
  std::size_t below(std::size_t n)
  {
    if (n == 0) {
      return 0;
    }
    auto k = static_cast<std::size_t>(uniform01() * static_cast<double>(n));
    return k < n ? k : n - 1;
  }

private:
  std::mt19937_64 engine_;
};

/// splitmix64 finalizer; decorrelates structured seed inputs.
inline std::uint64_t mix_u64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v)
{
  return mix_u64(h ^ mix_u64(v));
}

inline std::uint64_t hash_combine(std::uint64_t h, const std::string & s)
{
  std::uint64_t fnv = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    fnv = (fnv ^ c) * 0x100000001b3ULL;
  }
  return hash_combine(h, fnv);
}

}  // namespace sorbet

#endif  // SORBET__RANDOM_HPP_
