#pragma once

#include <Eigen/Core>

namespace cts {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

// One drone. Attitude is a scalar-first unit quaternion [q0,q1,q2,q3]
// mapping body to world.
struct QuadState {
  Vec3 position{Vec3::Zero()};     // p_W, m
  Vec3 velocity{Vec3::Zero()};     // v_W, m/s
  Vec4 attitude{1.0, 0.0, 0.0, 0.0};  // q_WB
  Vec3 body_rates{Vec3::Zero()};   // omega_B, rad/s
};

struct QuadParams {
  double mass = 0.087;             // kg, Tello-class
  double gravity = 9.81;           // m/s^2
  double max_thrust = 19.62;       // mass-normalized, m/s^2
  double max_body_rate = 6.0;      // rad/s, roll/pitch command ceiling
  double max_velocity_cmd = 1.5;   // m/s per body axis
  double max_yaw_rate_cmd = 1.5;   // rad/s
  double velocity_gain = 4.0;      // tracking controller K_v
  double attitude_gain = 8.0;      // tracking controller tilt gain
  double velocity_tau = 0.25;      // s, kinematic-mode velocity lag
  double yaw_rate_tau = 0.25;      // s, kinematic-mode yaw-rate lag
  double dt = 0.05;                // s, integration step

  void validate() const;  // throws std::invalid_argument
};

// High-level action: desired body-frame velocity plus yaw rate.
struct VelocityCommand {
  double vx = 0.0;
  double vy = 0.0;
  double vz = 0.0;
  double yaw_rate = 0.0;

  VelocityCommand clamped(const QuadParams& p) const;
  Eigen::Vector4d vec() const { return {vx, vy, vz, yaw_rate}; }
  static VelocityCommand from_vec(const Eigen::Vector4d& v) {
    return {v[0], v[1], v[2], v[3]};
  }
};

enum class DynamicsMode { Kinematic, RigidBody };

// Omega(omega_B): quaternion-rate generator, q_dot = 0.5 * Omega * q.
Mat4 skew_omega(const Vec3& omega);

Vec4 quat_derivative(const Vec4& q, const Vec3& omega);

Mat3 body_to_world(const Vec4& q);

// Hamilton product, scalar-first.
Vec4 quat_multiply(const Vec4& a, const Vec4& b);

Vec4 quat_from_yaw(double yaw);
double quat_yaw(const Vec4& q);

// World-frame unit forward vector (body x axis).
Vec3 forward_vector(const Vec4& q);

// Integrates translation under R*f+g and attitude under commanded body
// rates over params.dt. Body rates are taken as commanded (angular dynamics
// collapsed into the rate loop). The translational update keeps the exact
// constant-acceleration position term so ballistic arcs integrate without
// dt-order drift.
QuadState step_rigid_body(const QuadState& state, double thrust,
                          const Vec3& omega, const QuadParams& params);

struct ThrustRates {
  double thrust = 0.0;
  Vec3 body_rates{Vec3::Zero()};
};

// Proportional velocity tracking: desired world acceleration steers the
// thrust axis, yaw rate passes through.
ThrustRates velocity_controller(const QuadState& state,
                                const VelocityCommand& cmd,
                                const QuadParams& params);

// First-order lag on velocity and yaw rate; roll/pitch held level. Fast
// training mode.
QuadState step_kinematic(const QuadState& state, const VelocityCommand& cmd,
                         const QuadParams& params);

// Single entry point used by the environment.
QuadState step_dynamics(DynamicsMode mode, const QuadState& state,
                        const VelocityCommand& cmd, const QuadParams& params);

}  // namespace cts
