#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "cts/geometry.hpp"

namespace cts {

// Ray-cast perception standing in for the forward camera: a fixed
// body-frame fan of K rays, each reporting normalized hit distance and the
// class of the nearest object.
enum class HitClass : int { Obstacle = 0, Teammate = 1, Target = 2, None = 3 };
inline constexpr int kNumHitClasses = 4;

struct SensorConfig {
  int num_azimuths = 12;
  int num_elevations = 3;
  double azimuth_span = 3.141592653589793;    // rad, centered on body x
  double elevation_span = 1.5707963267948966; // rad, centered on level
  double max_range = 10.0;                    // m

  int num_rays() const { return num_azimuths * num_elevations; }
  int feature_dim() const { return num_rays() * (1 + kNumHitClasses); }
  void validate() const;  // throws std::invalid_argument
};

// Body-frame unit directions; azimuth-major, elevation-minor, both on bin
// centers so the fan never duplicates its span edges.
std::vector<Vec3> ray_directions(const SensorConfig& cfg);

struct RayHit {
  double distance = 1.0;  // normalized by max_range
  HitClass cls = HitClass::None;
};

struct SceneSphere {
  Vec3 center{Vec3::Zero()};
  double radius = 0.0;
};

// Everything a ray can hit, in world frame. Room walls are sensed from the
// inside (obstacle class); teammates are spheres; the target is a yawed box.
struct RayScene {
  Aabb room;
  std::vector<Aabb> obstacles;
  std::vector<SceneSphere> spheres;
  std::optional<Obb> target;
};

// Nearest hit along one world-frame ray; misses report (1.0, None).
RayHit cast_ray(const Vec3& origin, const Vec3& dir_world,
                const RayScene& scene, double max_range);

// Full fan from one pose. `rotation` maps body to world. Output is the
// per-ray feature block: K x (distance, one-hot class), flattened ray-major.
Eigen::VectorXd cast_rays(const Vec3& origin, const Eigen::Matrix3d& rotation,
                          const SensorConfig& cfg, const RayScene& scene);

}  // namespace cts
