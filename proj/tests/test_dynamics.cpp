#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cts/dynamics.hpp"
#include "cts/rng.hpp"

using namespace cts;

TEST_CASE("skew_omega layout") {
  CHECK(skew_omega(Vec3::Zero()).isZero(0.0));

  const Mat4 m = skew_omega({0, 0, 1});
  CHECK(m(0, 0) == 0.0);
  CHECK(m(0, 1) == 0.0);
  CHECK(m(0, 2) == 0.0);
  CHECK(m(0, 3) == -1.0);
  CHECK(m(3, 0) == 1.0);
  CHECK(m(3, 1) == 0.0);
  CHECK(m(3, 2) == 0.0);
  CHECK(m(3, 3) == 0.0);
}

TEST_CASE("skew_omega is exactly skew-symmetric") {
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    const Vec3 w{uniform(rng, -10, 10), uniform(rng, -10, 10), uniform(rng, -10, 10)};
    const Mat4 m = skew_omega(w);
    CHECK((m.transpose() + m).isZero(0.0));
  }
}

TEST_CASE("quat_derivative") {
  const Vec4 qid{1, 0, 0, 0};
  CHECK(quat_derivative(qid, Vec3::Zero()).isZero(0.0));

  const Vec4 dq = quat_derivative(qid, {0, 0, 1});
  CHECK(dq[0] == doctest::Approx(0.0));
  CHECK(dq[1] == doctest::Approx(0.0));
  CHECK(dq[2] == doctest::Approx(0.0));
  CHECK(dq[3] == doctest::Approx(0.5));

  // Tangency: <q, qdot> = 0 keeps the norm to first order.
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    Vec4 q{gaussian(rng), gaussian(rng), gaussian(rng), gaussian(rng)};
    q.normalize();
    const Vec3 w{uniform(rng, -5, 5), uniform(rng, -5, 5), uniform(rng, -5, 5)};
    CHECK(std::abs(q.dot(quat_derivative(q, w))) < 1e-9);
  }
}

TEST_CASE("body_to_world") {
  CHECK(body_to_world({1, 0, 0, 0}).isIdentity(1e-15));

  // 90 degree yaw maps body x to world y.
  const Vec4 q = quat_from_yaw(std::numbers::pi / 2);
  const Vec3 bx = body_to_world(q) * Vec3{1, 0, 0};
  CHECK(bx.x() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(bx.y() == doctest::Approx(1.0));
  CHECK(bx.z() == doctest::Approx(0.0).epsilon(1e-12));

  Rng rng(13);
  for (int i = 0; i < 200; ++i) {
    Vec4 q2{gaussian(rng), gaussian(rng), gaussian(rng), gaussian(rng)};
    q2.normalize();
    const Mat3 r = body_to_world(q2);
    CHECK(((r.transpose() * r) - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("step_rigid_body basics") {
  QuadParams p;
  p.validate();

  SUBCASE("hover equilibrium") {
    QuadState s;
    s.position = {1, 2, 1.5};
    const QuadState next = step_rigid_body(s, p.gravity, Vec3::Zero(), p);
    CHECK(next.velocity.norm() < 1e-12);
    CHECK((next.position - s.position).norm() < 1e-9);
  }

  SUBCASE("free fall") {
    QuadState s;
    const QuadState next = step_rigid_body(s, 0.0, Vec3::Zero(), p);
    CHECK(next.velocity.z() == doctest::Approx(-p.gravity * p.dt));
  }

  SUBCASE("net upward thrust") {
    QuadState s;
    const QuadState next = step_rigid_body(s, 12.0, Vec3::Zero(), p);
    CHECK(next.velocity.z() == doctest::Approx((12.0 - 9.81) * p.dt));
  }

  SUBCASE("rejects non-finite input") {
    QuadState s;
    s.velocity.x() = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(step_rigid_body(s, 9.81, Vec3::Zero(), p),
                    std::invalid_argument);
  }
}

TEST_CASE("ballistic trajectory matches the analytic solution") {
  QuadParams p;
  p.dt = 0.01;
  QuadState s;
  s.position = {0, 0, 2.0};
  s.velocity = {0.7, -0.3, 1.0};
  const Vec3 p0 = s.position;
  const Vec3 v0 = s.velocity;
  for (int i = 0; i < 100; ++i) s = step_rigid_body(s, 0.0, Vec3::Zero(), p);
  const double t = 1.0;
  const Vec3 expected = p0 + v0 * t + 0.5 * Vec3{0, 0, -p.gravity} * t * t;
  CHECK((s.position - expected).norm() < 1e-4);
}

TEST_CASE("quaternion norm stays unit over 5000 random steps") {
  QuadParams p;
  QuadState s;
  s.position = {0, 0, 1};
  Rng rng(17);
  for (int i = 0; i < 5000; ++i) {
    const double f = uniform(rng, 0.0, p.max_thrust);
    const Vec3 w{uniform(rng, -p.max_body_rate, p.max_body_rate),
                 uniform(rng, -p.max_body_rate, p.max_body_rate),
                 uniform(rng, -p.max_yaw_rate_cmd, p.max_yaw_rate_cmd)};
    s = step_rigid_body(s, f, w, p);
    CHECK(std::abs(s.attitude.norm() - 1.0) < 1e-6);
    CHECK(s.position.allFinite());
    CHECK(s.velocity.allFinite());
  }
}

TEST_CASE("velocity_controller") {
  QuadParams p;

  SUBCASE("equilibrium at rest") {
    QuadState s;
    const ThrustRates tr = velocity_controller(s, {}, p);
    CHECK(tr.thrust == doctest::Approx(p.gravity));
    CHECK(tr.body_rates.norm() < 1e-12);
  }

  SUBCASE("forward command pitches thrust toward +x") {
    QuadState s;
    VelocityCommand cmd;
    cmd.vx = 1.0;
    const ThrustRates tr = velocity_controller(s, cmd, p);
    CHECK(tr.body_rates.y() > 0.0);  // rotation about +y tilts body z toward +x
    CHECK(std::abs(tr.body_rates.x()) < 1e-12);
  }

  SUBCASE("yaw rate passthrough") {
    QuadState s;
    VelocityCommand cmd;
    cmd.yaw_rate = 0.5;
    const ThrustRates tr = velocity_controller(s, cmd, p);
    CHECK(tr.body_rates.z() == doctest::Approx(0.5));
  }
}

TEST_CASE("step_kinematic") {
  QuadParams p;  // dt = 0.05, tau = 0.25

  SUBCASE("commanded velocity is a fixed point") {
    QuadState s;
    s.velocity = {0.4, 0.0, 0.1};
    VelocityCommand cmd{0.4, 0.0, 0.1, 0.0};
    const QuadState next = step_kinematic(s, cmd, p);
    CHECK((next.velocity - s.velocity).norm() < 1e-12);
  }

  SUBCASE("20 percent advance per step at dt/tau = 0.2") {
    QuadState s;
    VelocityCommand cmd{1.0, 0.0, 0.0, 0.0};
    const QuadState next = step_kinematic(s, cmd, p);
    CHECK(next.velocity.x() == doctest::Approx(0.2));
  }

  SUBCASE("converges to the rotated command") {
    QuadState s;
    s.attitude = quat_from_yaw(0.7);
    VelocityCommand cmd{1.0, 0.2, -0.1, 0.0};
    const Vec3 target =
        body_to_world(quat_from_yaw(0.7)) * Vec3{cmd.vx, cmd.vy, cmd.vz};
    const int steps = static_cast<int>(10.0 * p.velocity_tau / p.dt);
    for (int i = 0; i < steps; ++i) s = step_kinematic(s, cmd, p);
    CHECK((s.velocity - target).norm() < 1e-3);
  }
}

TEST_CASE("kinematic and rigid modes agree on steady-state velocity") {
  QuadParams p;
  VelocityCommand cmd{1.0, -0.5, 0.2, 0.0};

  QuadState kin, rigid;
  kin.position = rigid.position = {0, 0, 50};  // unbounded space
  for (int i = 0; i < 400; ++i) {
    kin = step_dynamics(DynamicsMode::Kinematic, kin, cmd, p);
    rigid = step_dynamics(DynamicsMode::RigidBody, rigid, cmd, p);
  }
  const Vec3 vk = kin.velocity.normalized();
  const Vec3 vr = rigid.velocity.normalized();
  CHECK(vk.dot(vr) > 0.95);
  CHECK(std::abs(kin.velocity.norm() - rigid.velocity.norm()) <
        0.05 * kin.velocity.norm());
}

TEST_CASE("command clamping") {
  QuadParams p;
  const VelocityCommand c = VelocityCommand{9, -9, 9, -9}.clamped(p);
  CHECK(c.vx == doctest::Approx(p.max_velocity_cmd));
  CHECK(c.vy == doctest::Approx(-p.max_velocity_cmd));
  CHECK(c.vz == doctest::Approx(p.max_velocity_cmd));
  CHECK(c.yaw_rate == doctest::Approx(-p.max_yaw_rate_cmd));
}

TEST_CASE("QuadParams validation") {
  QuadParams p;
  p.dt = 0.2;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.dt = 0.05;
  p.mass = -1;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
