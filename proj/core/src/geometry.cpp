#include "cts/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace cts {

Vec3 Obb::to_local(const Vec3& p) const {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  const Vec3 d = p - center;
  return {c * d.x() + s * d.y(), -s * d.x() + c * d.y(), d.z()};
}

Aabb Obb::bounding_aabb() const {
  const double c = std::abs(std::cos(yaw));
  const double s = std::abs(std::sin(yaw));
  const Vec3 h{c * half.x() + s * half.y(), s * half.x() + c * half.y(),
               half.z()};
  return {center - h, center + h};
}

std::optional<RaySpan> ray_aabb_span(const Vec3& origin, const Vec3& dir,
                                     const Aabb& box) {
  double t_enter = -std::numeric_limits<double>::infinity();
  double t_exit = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) {
      if (origin[a] < box.min[a] || origin[a] > box.max[a]) return std::nullopt;
      continue;
    }
    double t1 = (box.min[a] - origin[a]) / dir[a];
    double t2 = (box.max[a] - origin[a]) / dir[a];
    if (t1 > t2) std::swap(t1, t2);
    t_enter = std::max(t_enter, t1);
    t_exit = std::min(t_exit, t2);
    if (t_enter > t_exit) return std::nullopt;
  }
  return RaySpan{t_enter, t_exit};
}

std::optional<double> ray_aabb_hit(const Vec3& origin, const Vec3& dir,
                                   const Aabb& box) {
  const auto span = ray_aabb_span(origin, dir, box);
  if (!span || span->t_exit < 0.0) return std::nullopt;
  return std::max(span->t_enter, 0.0);
}

std::optional<double> ray_aabb_shell_hit(const Vec3& origin, const Vec3& dir,
                                         const Aabb& box) {
  const auto span = ray_aabb_span(origin, dir, box);
  if (!span || span->t_exit < 0.0) return std::nullopt;
  if (span->t_enter >= 0.0 && !box.contains(origin)) return span->t_enter;
  return span->t_exit;
}

std::optional<double> ray_sphere_hit(const Vec3& origin, const Vec3& dir,
                                     const Vec3& center, double radius) {
  const Vec3 oc = center - origin;
  const double tca = oc.dot(dir);
  const double d2 = oc.squaredNorm() - tca * tca;
  const double r2 = radius * radius;
  if (d2 > r2) return std::nullopt;
  const double thc = std::sqrt(r2 - d2);
  const double t0 = tca - thc;
  const double t1 = tca + thc;
  if (t0 >= 0.0) return t0;
  if (t1 >= 0.0) return t1;
  return std::nullopt;
}

std::optional<double> ray_obb_hit(const Vec3& origin, const Vec3& dir,
                                  const Obb& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const Vec3 o = box.to_local(origin);
  const Vec3 d{c * dir.x() + s * dir.y(), -s * dir.x() + c * dir.y(), dir.z()};
  return ray_aabb_hit(o, d, Aabb{-box.half, box.half});
}

double point_aabb_distance(const Vec3& p, const Aabb& box) {
  return (p - box.closest_point(p)).norm();
}

double point_obb_distance(const Vec3& p, const Obb& box) {
  const Vec3 local = box.to_local(p);
  const Vec3 clamped = local.cwiseMax(-box.half).cwiseMin(box.half);
  return (local - clamped).norm();
}

bool aabb_overlap(const Aabb& a, const Aabb& b) {
  return (a.min.array() <= b.max.array()).all() &&
         (b.min.array() <= a.max.array()).all();
}

bool obb_aabb_overlap(const Obb& obb, const Aabb& aabb) {
  if (obb.center.z() + obb.half.z() < aabb.min.z() ||
      obb.center.z() - obb.half.z() > aabb.max.z())
    return false;

  // 2-D SAT over the four candidate axes.
  const double c = std::cos(obb.yaw);
  const double s = std::sin(obb.yaw);
  const std::array<Eigen::Vector2d, 4> axes = {
      Eigen::Vector2d{1, 0}, Eigen::Vector2d{0, 1}, Eigen::Vector2d{c, s},
      Eigen::Vector2d{-s, c}};

  const std::array<Eigen::Vector2d, 4> obb_corners = {
      Eigen::Vector2d{obb.center.x() + c * obb.half.x() - s * obb.half.y(),
                      obb.center.y() + s * obb.half.x() + c * obb.half.y()},
      Eigen::Vector2d{obb.center.x() - c * obb.half.x() - s * obb.half.y(),
                      obb.center.y() - s * obb.half.x() + c * obb.half.y()},
      Eigen::Vector2d{obb.center.x() + c * obb.half.x() + s * obb.half.y(),
                      obb.center.y() + s * obb.half.x() - c * obb.half.y()},
      Eigen::Vector2d{obb.center.x() - c * obb.half.x() + s * obb.half.y(),
                      obb.center.y() - s * obb.half.x() - c * obb.half.y()}};
  const std::array<Eigen::Vector2d, 4> box_corners = {
      Eigen::Vector2d{aabb.min.x(), aabb.min.y()},
      Eigen::Vector2d{aabb.max.x(), aabb.min.y()},
      Eigen::Vector2d{aabb.min.x(), aabb.max.y()},
      Eigen::Vector2d{aabb.max.x(), aabb.max.y()}};

  for (const auto& axis : axes) {
    double lo_a = std::numeric_limits<double>::infinity(), hi_a = -lo_a;
    double lo_b = std::numeric_limits<double>::infinity(), hi_b = -lo_b;
    for (const auto& p : obb_corners) {
      const double v = axis.dot(p);
      lo_a = std::min(lo_a, v);
      hi_a = std::max(hi_a, v);
    }
    for (const auto& p : box_corners) {
      const double v = axis.dot(p);
      lo_b = std::min(lo_b, v);
      hi_b = std::max(hi_b, v);
    }
    if (hi_a < lo_b || hi_b < lo_a) return false;
  }
  return true;
}

}  // namespace cts
