#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <optional>

#include "cts/geometry.hpp"
#include "cts/rng.hpp"
#include "cts/sensor.hpp"

using namespace cts;

namespace {

// Independent oracle: enumerate the six face planes of a box and intersect
// each as a bounded rectangle. No slab arithmetic shared with the
// implementation.
std::optional<double> oracle_box_faces(const Vec3& o, const Vec3& d,
                                       const Aabb& box) {
  std::optional<double> best;
  for (int axis = 0; axis < 3; ++axis) {
    for (int side = 0; side < 2; ++side) {
      const double plane = side == 0 ? box.min[axis] : box.max[axis];
      if (d[axis] == 0.0) continue;
      const double t = (plane - o[axis]) / d[axis];
      if (t < 0.0) continue;
      const Vec3 p = o + t * d;
      const int a1 = (axis + 1) % 3;
      const int a2 = (axis + 2) % 3;
      if (p[a1] < box.min[a1] - 1e-12 || p[a1] > box.max[a1] + 1e-12) continue;
      if (p[a2] < box.min[a2] - 1e-12 || p[a2] > box.max[a2] + 1e-12) continue;
      if (!best || t < *best) best = t;
    }
  }
  return best;
}

std::optional<double> oracle_solid_box(const Vec3& o, const Vec3& d,
                                       const Aabb& box) {
  if (box.contains(o)) return 0.0;
  return oracle_box_faces(o, d, box);
}

std::optional<double> oracle_sphere(const Vec3& o, const Vec3& d,
                                    const Vec3& c, double r) {
  // abc formula on |o + t d - c|^2 = r^2 with unit d.
  const Vec3 oc = o - c;
  const double b = 2.0 * d.dot(oc);
  const double cc = oc.squaredNorm() - r * r;
  const double disc = b * b - 4.0 * cc;
  if (disc < 0.0) return std::nullopt;
  const double s = std::sqrt(disc);
  const double t0 = (-b - s) / 2.0;
  const double t1 = (-b + s) / 2.0;
  if (t0 >= 0.0) return t0;
  if (t1 >= 0.0) return t1;
  return std::nullopt;
}

std::optional<double> oracle_obb(const Vec3& o, const Vec3& d, const Obb& obb) {
  // Rotate the query into the box frame, then face-enumerate.
  const double cy = std::cos(obb.yaw), sy = std::sin(obb.yaw);
  const Vec3 lo{cy * (o - obb.center).x() + sy * (o - obb.center).y(),
                -sy * (o - obb.center).x() + cy * (o - obb.center).y(),
                (o - obb.center).z()};
  const Vec3 ld{cy * d.x() + sy * d.y(), -sy * d.x() + cy * d.y(), d.z()};
  return oracle_solid_box(lo, ld, Aabb{-obb.half, obb.half});
}

RayHit oracle_cast(const Vec3& o, const Vec3& d, const RayScene& scene,
                   double max_range) {
  double best = max_range;
  HitClass cls = HitClass::None;
  // Room walls from inside: nearest face-plane hit is the exit face.
  if (const auto t = oracle_box_faces(o, d, scene.room); t && *t < best) {
    best = *t;
    cls = HitClass::Obstacle;
  }
  for (const auto& b : scene.obstacles)
    if (const auto t = oracle_solid_box(o, d, b); t && *t < best) {
      best = *t;
      cls = HitClass::Obstacle;
    }
  for (const auto& s : scene.spheres)
    if (const auto t = oracle_sphere(o, d, s.center, s.radius); t && *t < best) {
      best = *t;
      cls = HitClass::Teammate;
    }
  if (scene.target)
    if (const auto t = oracle_obb(o, d, *scene.target); t && *t < best) {
      best = *t;
      cls = HitClass::Target;
    }
  if (cls == HitClass::None) return {1.0, HitClass::None};
  return {best / max_range, cls};
}

Vec3 random_unit(Rng& rng) {
  Vec3 v;
  do {
    v = {gaussian(rng), gaussian(rng), gaussian(rng)};
  } while (v.norm() < 1e-6);
  return v.normalized();
}

}  // namespace

TEST_CASE("ray hits a wall 2 m ahead") {
  RayScene scene;
  scene.room = {Vec3{0, 0, 0}, Vec3{5, 5, 3}};
  const RayHit hit = cast_ray({3, 2.5, 1.5}, {1, 0, 0}, scene, 10.0);
  CHECK(hit.distance == doctest::Approx(0.2));
  CHECK(hit.cls == HitClass::Obstacle);
}

TEST_CASE("miss reports unit distance and class none") {
  RayScene scene;
  scene.room = {Vec3{0, 0, 0}, Vec3{50, 50, 50}};
  const RayHit hit = cast_ray({25, 25, 25}, {1, 0, 0}, scene, 10.0);
  CHECK(hit.distance == doctest::Approx(1.0));
  CHECK(hit.cls == HitClass::None);
}

TEST_CASE("target centered on a forward ray") {
  RayScene scene;
  scene.room = {Vec3{0, 0, 0}, Vec3{5, 5, 3}};
  scene.target = Obb{{2.0, 1.0, 1.0}, Vec3::Constant(0.125), 0.3};
  const RayHit hit = cast_ray({1.0, 1.0, 1.0}, {1, 0, 0}, scene, 10.0);
  CHECK(hit.cls == HitClass::Target);
  CHECK(hit.distance < 1.0);
  CHECK(hit.distance * 10.0 > 0.8);
}

TEST_CASE("ray outputs match the face-enumeration oracle on random scenes") {
  Rng rng(23);
  int rays_checked = 0;
  for (int scene_i = 0; scene_i < 1000; ++scene_i) {
    RayScene scene;
    scene.room = {Vec3{0, 0, 0},
                  Vec3{uniform(rng, 3, 10), uniform(rng, 3, 10), uniform(rng, 2, 5)}};
    const int n_obs = static_cast<int>(uniform(rng) * 6);
    for (int i = 0; i < n_obs; ++i) {
      Vec3 lo{uniform(rng, 0, scene.room.max.x() - 0.5),
              uniform(rng, 0, scene.room.max.y() - 0.5),
              uniform(rng, 0, scene.room.max.z() - 0.5)};
      Vec3 sz{uniform(rng, 0.2, 1.5), uniform(rng, 0.2, 1.5), uniform(rng, 0.2, 1.5)};
      scene.obstacles.push_back({lo, (lo + sz).cwiseMin(scene.room.max)});
    }
    const int n_sph = static_cast<int>(uniform(rng) * 3);
    for (int i = 0; i < n_sph; ++i)
      scene.spheres.push_back({{uniform(rng, 0.3, scene.room.max.x() - 0.3),
                                uniform(rng, 0.3, scene.room.max.y() - 0.3),
                                uniform(rng, 0.3, scene.room.max.z() - 0.3)},
                               uniform(rng, 0.05, 0.3)});
    scene.target = Obb{{uniform(rng, 0.4, scene.room.max.x() - 0.4),
                        uniform(rng, 0.4, scene.room.max.y() - 0.4),
                        uniform(rng, 0.4, scene.room.max.z() - 0.4)},
                       Vec3::Constant(uniform(rng, 0.1, 0.15)),
                       uniform(rng, 0, 2 * std::numbers::pi)};

    Vec3 origin;
    bool ok = false;
    for (int tries = 0; tries < 50 && !ok; ++tries) {
      origin = {uniform(rng, 0.1, scene.room.max.x() - 0.1),
                uniform(rng, 0.1, scene.room.max.y() - 0.1),
                uniform(rng, 0.1, scene.room.max.z() - 0.1)};
      ok = true;
      for (const auto& b : scene.obstacles) ok &= !b.contains(origin);
      for (const auto& s : scene.spheres)
        ok &= (origin - s.center).norm() > s.radius;
      if (scene.target) ok &= point_obb_distance(origin, *scene.target) > 1e-3;
    }
    if (!ok) continue;

    for (int r = 0; r < 8; ++r) {
      const Vec3 dir = random_unit(rng);
      const RayHit got = cast_ray(origin, dir, scene, 10.0);
      const RayHit want = oracle_cast(origin, dir, scene, 10.0);
      CHECK(got.cls == want.cls);
      CHECK(std::abs(got.distance - want.distance) < 1e-9);
      ++rays_checked;
    }
  }
  CHECK(rays_checked > 5000);
}

TEST_CASE("ray fan geometry") {
  SensorConfig cfg;
  const auto dirs = ray_directions(cfg);
  REQUIRE(static_cast<int>(dirs.size()) == cfg.num_rays());
  for (const auto& d : dirs) {
    CHECK(d.norm() == doctest::Approx(1.0));
    CHECK(d.x() > 0.0);  // forward fan only
  }
  // Feature block: distance + one-hot class per ray.
  CHECK(cfg.feature_dim() == cfg.num_rays() * 5);
}

TEST_CASE("cast_rays one-hot structure") {
  SensorConfig cfg;
  RayScene scene;
  scene.room = {Vec3{0, 0, 0}, Vec3{5, 5, 3}};
  const Eigen::VectorXd f =
      cast_rays({2.5, 2.5, 1.5}, Eigen::Matrix3d::Identity(), cfg, scene);
  REQUIRE(f.size() == cfg.feature_dim());
  for (int k = 0; k < cfg.num_rays(); ++k) {
    const int base = k * 5;
    CHECK(f[base] >= 0.0);
    CHECK(f[base] <= 1.0);
    double onehot = 0;
    for (int c = 0; c < 4; ++c) onehot += f[base + 1 + c];
    CHECK(onehot == doctest::Approx(1.0));
  }
}

TEST_CASE("point distances and overlaps") {
  const Aabb box{{0, 0, 0}, {1, 1, 1}};
  CHECK(point_aabb_distance({0.5, 0.5, 0.5}, box) == 0.0);
  CHECK(point_aabb_distance({2.0, 0.5, 0.5}, box) == doctest::Approx(1.0));

  const Obb obb{{0, 0, 0}, {1, 0.5, 0.5}, std::numbers::pi / 2};
  // After 90 deg yaw the long axis lies along y.
  CHECK(point_obb_distance({0, 1.4, 0}, obb) == doctest::Approx(0.4));
  CHECK(point_obb_distance({0.9, 0, 0}, obb) == doctest::Approx(0.4));

  CHECK(aabb_overlap(box, Aabb{{0.5, 0.5, 0.5}, {2, 2, 2}}));
  CHECK(!aabb_overlap(box, Aabb{{1.5, 0, 0}, {2, 1, 1}}));

  // Rotated box corner pokes into the axis-aligned one.
  const Obb rot{{1.35, 0.5, 0.5}, {0.3, 0.1, 0.3}, std::numbers::pi / 4};
  CHECK(obb_aabb_overlap(rot, box));
  const Obb far{{2.0, 0.5, 0.5}, {0.3, 0.1, 0.3}, std::numbers::pi / 4};
  CHECK(!obb_aabb_overlap(far, box));
  // Separated only along z.
  const Obb above{{0.5, 0.5, 1.8}, {0.3, 0.3, 0.3}, 0.2};
  CHECK(!obb_aabb_overlap(above, box));
}

TEST_CASE("obb sat agrees with corner sampling on random pairs") {
  Rng rng(31);
  for (int i = 0; i < 2000; ++i) {
    const Aabb box{{uniform(rng, -1, 0), uniform(rng, -1, 0), uniform(rng, -1, 0)},
                   {uniform(rng, 0, 1), uniform(rng, 0, 1), uniform(rng, 0, 1)}};
    const Obb obb{{uniform(rng, -1.5, 1.5), uniform(rng, -1.5, 1.5),
                   uniform(rng, -1.5, 1.5)},
                  {uniform(rng, 0.05, 0.5), uniform(rng, 0.05, 0.5),
                   uniform(rng, 0.05, 0.5)},
                  uniform(rng, 0, 2 * std::numbers::pi)};
    // Dense point sampling inside the obb as a one-sided oracle: any sampled
    // point inside both boxes implies overlap must be reported.
    bool sampled_overlap = false;
    for (int s = 0; s < 200 && !sampled_overlap; ++s) {
      const Vec3 local{uniform(rng, -obb.half.x(), obb.half.x()),
                       uniform(rng, -obb.half.y(), obb.half.y()),
                       uniform(rng, -obb.half.z(), obb.half.z())};
      const double cy = std::cos(obb.yaw), sy = std::sin(obb.yaw);
      const Vec3 world{obb.center.x() + cy * local.x() - sy * local.y(),
                       obb.center.y() + sy * local.x() + cy * local.y(),
                       obb.center.z() + local.z()};
      sampled_overlap = box.contains(world);
    }
    if (sampled_overlap) CHECK(obb_aabb_overlap(obb, box));
  }
}
