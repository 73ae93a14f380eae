#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace cts {

using Rng = std::mt19937_64;

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream seed from (base, a, b). Used so that per-episode /
// per-env results do not depend on worker scheduling.
inline uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b = 0) {
  return splitmix64(splitmix64(base ^ (a * 0x9e3779b97f4a7c15ULL)) ^
                    (b * 0xbf58476d1ce4e5b9ULL));
}

// Uniform in [0, 1). Hand-rolled so traces are bit-stable across stdlibs.
inline double uniform(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform(rng);
}

inline double gaussian(Rng& rng) {
  // Box-Muller, cosine branch only.
  double u1 = uniform(rng);
  double u2 = uniform(rng);
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

// Uniform inside the closed ball of given radius.
inline Eigen::Vector3d uniform_ball(Rng& rng, double radius) {
  Eigen::Vector3d dir;
  double n2 = 0.0;
  do {
    dir = {gaussian(rng), gaussian(rng), gaussian(rng)};
    n2 = dir.squaredNorm();
  } while (n2 < 1e-12);
  const double r = radius * std::cbrt(uniform(rng));
  return dir * (r / std::sqrt(n2));
}

}  // namespace cts
