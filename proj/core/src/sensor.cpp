#include "cts/sensor.hpp"

#include <cmath>
#include <stdexcept>

namespace cts {

void SensorConfig::validate() const {
  if (num_azimuths < 1 || num_elevations < 1)
    throw std::invalid_argument("sensor config: ray counts must be positive");
  if (!(azimuth_span > 0 && azimuth_span <= 2 * 3.141592653589793) ||
      !(elevation_span > 0 && elevation_span < 3.141592653589793))
    throw std::invalid_argument("sensor config: invalid spans");
  if (max_range <= 0)
    throw std::invalid_argument("sensor config: max_range must be positive");
}

std::vector<Vec3> ray_directions(const SensorConfig& cfg) {
  std::vector<Vec3> dirs;
  dirs.reserve(cfg.num_rays());
  for (int i = 0; i < cfg.num_azimuths; ++i) {
    const double az =
        -0.5 * cfg.azimuth_span + (i + 0.5) * cfg.azimuth_span / cfg.num_azimuths;
    for (int j = 0; j < cfg.num_elevations; ++j) {
      const double el = -0.5 * cfg.elevation_span +
                        (j + 0.5) * cfg.elevation_span / cfg.num_elevations;
      dirs.push_back({std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                      std::sin(el)});
    }
  }
  return dirs;
}

RayHit cast_ray(const Vec3& origin, const Vec3& dir, const RayScene& scene,
                double max_range) {
  double best = max_range;
  HitClass cls = HitClass::None;

  if (const auto t = ray_aabb_shell_hit(origin, dir, scene.room); t && *t < best) {
    best = *t;
    cls = HitClass::Obstacle;
  }
  for (const auto& box : scene.obstacles) {
    if (const auto t = ray_aabb_hit(origin, dir, box); t && *t < best) {
      best = *t;
      cls = HitClass::Obstacle;
    }
  }
  for (const auto& s : scene.spheres) {
    if (const auto t = ray_sphere_hit(origin, dir, s.center, s.radius);
        t && *t < best) {
      best = *t;
      cls = HitClass::Teammate;
    }
  }
  if (scene.target) {
    if (const auto t = ray_obb_hit(origin, dir, *scene.target); t && *t < best) {
      best = *t;
      cls = HitClass::Target;
    }
  }

  if (cls == HitClass::None) return {1.0, HitClass::None};
  return {best / max_range, cls};
}

Eigen::VectorXd cast_rays(const Vec3& origin, const Eigen::Matrix3d& rotation,
                          const SensorConfig& cfg, const RayScene& scene) {
  const auto dirs = ray_directions(cfg);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(cfg.feature_dim());
  for (size_t k = 0; k < dirs.size(); ++k) {
    const RayHit hit = cast_ray(origin, rotation * dirs[k], scene, cfg.max_range);
    const int base = static_cast<int>(k) * (1 + kNumHitClasses);
    out[base] = hit.distance;
    out[base + 1 + static_cast<int>(hit.cls)] = 1.0;
  }
  return out;
}

}  // namespace cts
