#pragma once

#include <Eigen/Core>
#include <optional>

namespace cts {

using Vec3 = Eigen::Vector3d;

struct Aabb {
  Vec3 min{Vec3::Zero()};
  Vec3 max{Vec3::Zero()};

  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extents() const { return max - min; }
  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  Vec3 closest_point(const Vec3& p) const {
    return p.cwiseMax(min).cwiseMin(max);
  }
  Aabb shrunk(double margin) const {
    return {min + Vec3::Constant(margin), max - Vec3::Constant(margin)};
  }
};

// Box rotated about the world z axis only (the target).
struct Obb {
  Vec3 center{Vec3::Zero()};
  Vec3 half{Vec3::Zero()};
  double yaw = 0.0;

  Vec3 to_local(const Vec3& p) const;
  Aabb bounding_aabb() const;
};

struct RaySpan {
  double t_enter;
  double t_exit;
};

// Slab intersection of an infinite line o + t*d with a box; nullopt when the
// line misses. Callers pick enter/exit per their semantics.
std::optional<RaySpan> ray_aabb_span(const Vec3& origin, const Vec3& dir,
                                     const Aabb& box);

// Distance to a solid box: 0 when starting inside.
std::optional<double> ray_aabb_hit(const Vec3& origin, const Vec3& dir,
                                   const Aabb& box);

// Distance to the box shell: enter face from outside, exit face from inside.
// Room walls are sensed this way.
std::optional<double> ray_aabb_shell_hit(const Vec3& origin, const Vec3& dir,
                                         const Aabb& box);

std::optional<double> ray_sphere_hit(const Vec3& origin, const Vec3& dir,
                                     const Vec3& center, double radius);

std::optional<double> ray_obb_hit(const Vec3& origin, const Vec3& dir,
                                  const Obb& box);

double point_aabb_distance(const Vec3& p, const Aabb& box);
double point_obb_distance(const Vec3& p, const Obb& box);

bool aabb_overlap(const Aabb& a, const Aabb& b);

// Exact separating-axis test; the Obb is z-aligned so the test reduces to a
// z-interval check plus 2-D SAT in the xy plane.
bool obb_aabb_overlap(const Obb& obb, const Aabb& aabb);

}  // namespace cts
