#include "cts/dynamics.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cts {

namespace {

bool finite(const Vec3& v) { return v.allFinite(); }

double clamp(double v, double lo, double hi) { return std::clamp(v, lo, hi); }

}  // namespace

void QuadParams::validate() const {
  if (!(mass > 0.0 && gravity > 0.0 && max_thrust > 0.0 &&
        max_body_rate > 0.0 && max_velocity_cmd > 0.0 &&
        max_yaw_rate_cmd > 0.0 && velocity_gain > 0.0 &&
        attitude_gain > 0.0 && velocity_tau > 0.0 && yaw_rate_tau > 0.0))
    throw std::invalid_argument("QuadParams: all bounds must be positive");
  if (!(dt > 0.0 && dt <= 0.1))
    throw std::invalid_argument("QuadParams: dt must lie in (0, 0.1]");
}

VelocityCommand VelocityCommand::clamped(const QuadParams& p) const {
  return {clamp(vx, -p.max_velocity_cmd, p.max_velocity_cmd),
          clamp(vy, -p.max_velocity_cmd, p.max_velocity_cmd),
          clamp(vz, -p.max_velocity_cmd, p.max_velocity_cmd),
          clamp(yaw_rate, -p.max_yaw_rate_cmd, p.max_yaw_rate_cmd)};
}

Mat4 skew_omega(const Vec3& w) {
  Mat4 m;
  m << 0.0, -w.x(), -w.y(), -w.z(),
       w.x(), 0.0, w.z(), -w.y(),
       w.y(), -w.z(), 0.0, w.x(),
       w.z(), w.y(), -w.x(), 0.0;
  return m;
}

Vec4 quat_derivative(const Vec4& q, const Vec3& omega) {
  return 0.5 * skew_omega(omega) * q;
}

Mat3 body_to_world(const Vec4& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
       2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
       2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

Vec4 quat_multiply(const Vec4& a, const Vec4& b) {
  return {a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
          a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
          a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
          a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]};
}

Vec4 quat_from_yaw(double yaw) {
  return {std::cos(0.5 * yaw), 0.0, 0.0, std::sin(0.5 * yaw)};
}

double quat_yaw(const Vec4& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  return std::atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z));
}

Vec3 forward_vector(const Vec4& q) { return body_to_world(q).col(0); }

namespace {

// Body-rate rotation over dt via the quaternion exponential; equivalent to
// integrating q_dot = 0.5*Omega(w)*q exactly for constant w.
Vec4 integrate_attitude(const Vec4& q, const Vec3& omega, double dt) {
  const double angle = omega.norm() * dt;
  Vec4 dq{1.0, 0.0, 0.0, 0.0};
  if (angle > 1e-12) {
    const Vec3 axis = omega / omega.norm();
    const double h = 0.5 * angle;
    dq = {std::cos(h), axis.x() * std::sin(h), axis.y() * std::sin(h),
          axis.z() * std::sin(h)};
  }
  Vec4 out = quat_multiply(q, dq);
  out.normalize();
  return out;
}

}  // namespace

QuadState step_rigid_body(const QuadState& state, double thrust,
                          const Vec3& omega, const QuadParams& params) {
  if (!finite(state.position) || !finite(state.velocity) ||
      !state.attitude.allFinite() || !std::isfinite(thrust) || !finite(omega))
    throw std::invalid_argument("step_rigid_body: non-finite input");

  const double f = clamp(thrust, 0.0, params.max_thrust);
  Vec3 w = omega;
  w.x() = clamp(w.x(), -params.max_body_rate, params.max_body_rate);
  w.y() = clamp(w.y(), -params.max_body_rate, params.max_body_rate);
  w.z() = clamp(w.z(), -params.max_yaw_rate_cmd, params.max_yaw_rate_cmd);

  const Mat3 rot = body_to_world(state.attitude);
  const Vec3 accel = rot * Vec3{0.0, 0.0, f} + Vec3{0.0, 0.0, -params.gravity};

  QuadState next;
  next.velocity = state.velocity + accel * params.dt;
  next.position = state.position + state.velocity * params.dt +
                  0.5 * accel * params.dt * params.dt;
  next.attitude = integrate_attitude(state.attitude, w, params.dt);
  next.body_rates = w;
  return next;
}

ThrustRates velocity_controller(const QuadState& state,
                                const VelocityCommand& cmd,
                                const QuadParams& params) {
  const VelocityCommand c = cmd.clamped(params);
  const Mat3 rot = body_to_world(state.attitude);
  const Vec3 v_des = rot * Vec3{c.vx, c.vy, c.vz};
  const Vec3 a_des = params.velocity_gain * (v_des - state.velocity) +
                     Vec3{0.0, 0.0, params.gravity};

  const Vec3 body_z = rot.col(2);
  ThrustRates out;
  out.thrust = clamp(a_des.dot(body_z), 0.0, params.max_thrust);

  // Tilt toward the desired thrust direction: rate about the body-frame
  // axis z_B x z_des.
  Vec3 z_des = a_des;
  if (z_des.norm() < 1e-9) z_des = Vec3{0.0, 0.0, 1.0};
  z_des.normalize();
  const Vec3 err_world = body_z.cross(z_des);
  const Vec3 err_body = rot.transpose() * err_world;
  out.body_rates.x() =
      clamp(params.attitude_gain * err_body.x(), -params.max_body_rate,
            params.max_body_rate);
  out.body_rates.y() =
      clamp(params.attitude_gain * err_body.y(), -params.max_body_rate,
            params.max_body_rate);
  out.body_rates.z() = c.yaw_rate;
  return out;
}

QuadState step_kinematic(const QuadState& state, const VelocityCommand& cmd,
                         const QuadParams& params) {
  if (!finite(state.position) || !finite(state.velocity) ||
      !state.attitude.allFinite())
    throw std::invalid_argument("step_kinematic: non-finite input");

  const VelocityCommand c = cmd.clamped(params);
  const double yaw = quat_yaw(state.attitude);
  const Mat3 rot = body_to_world(quat_from_yaw(yaw));
  const Vec3 v_target = rot * Vec3{c.vx, c.vy, c.vz};

  const double kv = std::min(1.0, params.dt / params.velocity_tau);
  const double kw = std::min(1.0, params.dt / params.yaw_rate_tau);

  QuadState next;
  next.velocity = state.velocity + (v_target - state.velocity) * kv;
  next.position = state.position + next.velocity * params.dt;
  const double wz = state.body_rates.z() + (c.yaw_rate - state.body_rates.z()) * kw;
  next.attitude = quat_from_yaw(yaw + wz * params.dt);
  next.body_rates = {0.0, 0.0, wz};
  return next;
}

QuadState step_dynamics(DynamicsMode mode, const QuadState& state,
                        const VelocityCommand& cmd, const QuadParams& params) {
  if (mode == DynamicsMode::Kinematic) return step_kinematic(state, cmd, params);
  const ThrustRates tr = velocity_controller(state, cmd, params);
  return step_rigid_body(state, tr.thrust, tr.body_rates, params);
}

}  // namespace cts
