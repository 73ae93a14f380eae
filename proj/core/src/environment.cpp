#include "cts/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cts {

const char* to_string(AgentStatusKind kind) {
  switch (kind) {
    case AgentStatusKind::Active: return "active";
    case AgentStatusKind::Crashed: return "crashed";
    case AgentStatusKind::Reached: return "reached";
  }
  return "?";
}

const char* to_string(DoneCause cause) {
  switch (cause) {
    case DoneCause::None: return "none";
    case DoneCause::Reached: return "reached";
    case DoneCause::AllCrashed: return "all_crashed";
    case DoneCause::TimeLimit: return "time_limit";
  }
  return "?";
}

double terminal_reward(TerminalEvent event, const Vec3& crash_position,
                       const Vec3& initial_position,
                       const Vec3& target_position, const Vec3& forward,
                       double alpha, double beta) {
  if (event == TerminalEvent::Reached) return 5.0;

  const Vec3 d_t = target_position - crash_position;
  const Vec3 d_init = target_position - initial_position;
  const double dist_term = d_t.norm() / std::max(d_init.norm(), 1e-9);

  double heading_term = 0.0;
  const double dt_norm = d_t.norm();
  const double fwd_norm = forward.norm();
  if (dt_norm >= 1e-6 && fwd_norm >= 1e-9) {
    const double cosang =
        std::clamp(d_t.dot(forward) / (dt_norm * fwd_norm), -1.0, 1.0);
    heading_term = std::acos(cosang) / std::numbers::pi;
  }
  return -alpha * dist_term - beta * heading_term - 3.0;
}

Environment::Environment(WorldConfig world, SensorConfig sensor,
                         QuadParams quad, DynamicsMode mode, uint64_t seed)
    : world_(std::move(world)),
      sensor_(sensor),
      quad_(quad),
      mode_(mode),
      num_agents_(world_.num_agents),
      rng_(seed) {
  world_.validate();
  sensor_.validate();
  quad_.validate();
  states_.resize(num_agents_);
  statuses_.resize(num_agents_);
  initial_positions_.resize(num_agents_, Vec3::Zero());
  last_actions_.resize(num_agents_, Eigen::Vector4d::Zero());
}

void Environment::reseed(uint64_t seed) { rng_.seed(seed); }

TargetSpec Environment::spawn_target(double epsilon) {
  const Aabb room = world_.room_box();
  for (int attempt = 0; attempt < 100; ++attempt) {
    TargetSpec t;
    const double r_seed = uniform(rng_);
    t.hidden = r_seed <= epsilon;
    if (t.hidden) {
      const size_t idx = static_cast<size_t>(
          uniform(rng_) * static_cast<double>(world_.hidden_locations.size()));
      t.position = world_.hidden_locations[std::min(
          idx, world_.hidden_locations.size() - 1)];
    } else {
      t.position = world_.visible_region.center +
                   uniform_ball(rng_, world_.visible_region.radius);
    }
    const RandomizationConfig& r = world_.randomization;
    if (r.enabled) {
      t.scale = uniform(rng_, r.target_scale_min, r.target_scale_max);
      t.yaw = uniform(rng_, r.target_yaw_min, r.target_yaw_max);
    } else {
      t.scale = 0.5 * (r.target_scale_min + r.target_scale_max);
      t.yaw = 0.0;
    }

    const Obb box = t.box();
    const Aabb hull = box.bounding_aabb();
    bool valid = room.contains(hull.min) && room.contains(hull.max);
    for (const auto& o : world_.obstacles) {
      if (!valid) break;
      valid = !obb_aabb_overlap(box, o.box);
    }
    if (valid) return t;
  }
  throw std::runtime_error(
      "spawn_target: no valid position after 100 attempts; visible region or "
      "hidden locations collide with the world geometry");
}

bool Environment::position_free(const Vec3& p, int up_to_agent) const {
  const double r = world_.collision_radius;
  const Aabb inner = world_.room_box().shrunk(r);
  if (!inner.contains(p)) return false;
  for (const auto& o : world_.obstacles)
    if (point_aabb_distance(p, o.box) < r) return false;
  if (point_obb_distance(p, target_.box()) < std::max(r, world_.reach_threshold))
    return false;
  for (int j = 0; j < up_to_agent; ++j)
    if ((p - states_[j].position).norm() < 2 * r) return false;
  return true;
}

std::vector<Eigen::VectorXd> Environment::reset(double epsilon) {
  target_ = spawn_target(epsilon);
  epsilon_used_ = epsilon;
  step_count_ = 0;
  done_ = false;
  cause_ = DoneCause::None;

  const RandomizationConfig& r = world_.randomization;
  for (int i = 0; i < num_agents_; ++i) {
    const AgentStart& start = world_.agent_starts[i];
    bool placed = false;
    for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
      Vec3 p = start.position;
      double yaw = start.yaw;
      if (r.enabled) {
        p += uniform_ball(rng_, r.agent_position_noise);
        yaw += uniform(rng_, -r.agent_yaw_noise, r.agent_yaw_noise);
      }
      if (!position_free(p, i)) continue;
      states_[i] = QuadState{};
      states_[i].position = p;
      states_[i].attitude = quat_from_yaw(yaw);
      placed = true;
    }
    if (!placed)
      throw std::runtime_error(
          "reset: could not place agent " + std::to_string(i) +
          " collision-free after 100 attempts; start area infeasible");
    statuses_[i] = AgentStatus{};
    initial_positions_[i] = states_[i].position;
    last_actions_[i].setZero();
  }

  std::vector<Eigen::VectorXd> obs(num_agents_);
  for (int i = 0; i < num_agents_; ++i) obs[i] = observe(i);
  return obs;
}

Vec3 Environment::nearest_teammate(int self, const std::vector<Vec3>& positions,
                                   const std::vector<AgentStatus>& statuses) {
  Vec3 best = Vec3::Zero();
  double best_dist = std::numeric_limits<double>::infinity();
  for (int j = 0; j < static_cast<int>(positions.size()); ++j) {
    if (j == self || !statuses[j].active()) continue;
    const Vec3 rel = positions[j] - positions[self];
    const double d = rel.norm();
    if (d < best_dist) {
      best_dist = d;
      best = rel;
    }
  }
  return best;
}

RayScene Environment::scene_for(int agent) const {
  RayScene scene;
  scene.room = world_.room_box();
  scene.obstacles.reserve(world_.obstacles.size());
  for (const auto& o : world_.obstacles) scene.obstacles.push_back(o.box);
  for (int j = 0; j < num_agents_; ++j) {
    if (j == agent) continue;
    scene.spheres.push_back({states_[j].position, world_.collision_radius});
  }
  scene.target = target_.box();
  return scene;
}

Eigen::VectorXd Environment::observe(int agent) const {
  const ObservationLayout lay = layout();
  Eigen::VectorXd obs = Eigen::VectorXd::Zero(lay.total());

  const QuadState& s = states_[agent];
  const Mat3 rot = body_to_world(s.attitude);
  obs.head(lay.ray_dim()) = cast_rays(s.position, rot, sensor_, scene_for(agent));
  obs.segment<3>(lay.position_offset()) = s.position;
  obs.segment<4>(lay.quaternion_offset()) = s.attitude;
  obs.segment<3>(lay.forward_offset()) = rot.col(0);
  obs.segment<4>(lay.last_action_offset()) = last_actions_[agent];

  std::vector<Vec3> positions(num_agents_);
  for (int j = 0; j < num_agents_; ++j) positions[j] = states_[j].position;
  obs.segment<3>(lay.teammate_offset()) =
      nearest_teammate(agent, positions, statuses_);
  return obs;
}

StepResult Environment::step(const std::vector<VelocityCommand>& actions) {
  if (done_) throw std::logic_error("step: episode already finished; call reset");
  if (static_cast<int>(actions.size()) != num_agents_)
    throw std::invalid_argument("step: one action required per agent");

  ++step_count_;

  // Move every active agent; crashed and reached agents stay frozen.
  for (int i = 0; i < num_agents_; ++i) {
    if (!statuses_[i].active()) continue;
    const VelocityCommand cmd = actions[i].clamped(quad_);
    states_[i] = step_dynamics(mode_, states_[i], cmd, quad_);
    last_actions_[i] = cmd.vec();
  }

  StepResult result;
  result.statuses = statuses_;
  result.rewards.assign(num_agents_, 0.0);
  result.target_position = target_.position;
  result.epsilon_used = epsilon_used_;

  // Reach first: touching the target is how reach is detected, never a crash.
  std::vector<bool> reached_now(num_agents_, false);
  std::vector<bool> crashed_now(num_agents_, false);
  std::vector<const char*> crash_kind(num_agents_, nullptr);
  const Obb target_box = target_.box();
  for (int i = 0; i < num_agents_; ++i) {
    if (!statuses_[i].active()) continue;
    if (point_obb_distance(states_[i].position, target_box) <=
        world_.reach_threshold)
      reached_now[i] = true;
  }

  const double r = world_.collision_radius;
  const Aabb inner = world_.room_box().shrunk(r);
  for (int i = 0; i < num_agents_; ++i) {
    if (!statuses_[i].active() || reached_now[i]) continue;
    if (!inner.contains(states_[i].position)) {
      crashed_now[i] = true;
      crash_kind[i] = "crash_wall";
      continue;
    }
    for (const auto& o : world_.obstacles) {
      if (point_aabb_distance(states_[i].position, o.box) < r) {
        crashed_now[i] = true;
        crash_kind[i] = "crash_obstacle";
        break;
      }
    }
    if (crashed_now[i]) continue;
    for (int j = 0; j < num_agents_; ++j) {
      if (j == i || reached_now[j]) continue;
      if ((states_[i].position - states_[j].position).norm() < 2 * r) {
        crashed_now[i] = true;
        crash_kind[i] = "crash_teammate";
        break;
      }
    }
  }

  bool any_reach = false;
  for (int i = 0; i < num_agents_; ++i) any_reach |= reached_now[i];

  // Rewards. Terminal rewards replace the per-step existential penalty on
  // the step they fire; the +5 reach bonus is a team broadcast.
  const double existential = -1.0 / static_cast<double>(world_.t_max);
  for (int i = 0; i < num_agents_; ++i) {
    const bool was_active = statuses_[i].active();
    if (reached_now[i]) {
      statuses_[i] = {AgentStatusKind::Reached, step_count_};
      result.rewards[i] = terminal_reward(TerminalEvent::Reached, {}, {}, {},
                                          {}, world_.alpha, world_.beta);
      result.events.push_back({step_count_, i, "reach"});
    } else if (crashed_now[i]) {
      statuses_[i] = {AgentStatusKind::Crashed, step_count_};
      const Mat3 rot = body_to_world(states_[i].attitude);
      result.rewards[i] = terminal_reward(
          TerminalEvent::Crashed, states_[i].position, initial_positions_[i],
          target_.position, rot.col(0), world_.alpha, world_.beta);
      if (any_reach) result.rewards[i] += 5.0;
      result.events.push_back({step_count_, i, crash_kind[i]});
    } else if (was_active) {
      result.rewards[i] = any_reach ? 5.0 : existential;
    } else {
      // Frozen agents earn nothing except the team broadcast.
      result.rewards[i] = any_reach ? 5.0 : 0.0;
    }
  }

  bool all_crashed = true;
  for (int i = 0; i < num_agents_; ++i)
    all_crashed &= statuses_[i].kind == AgentStatusKind::Crashed;

  if (any_reach) {
    done_ = true;
    cause_ = DoneCause::Reached;
  } else if (all_crashed) {
    done_ = true;
    cause_ = DoneCause::AllCrashed;
  } else if (step_count_ >= world_.t_max) {
    done_ = true;
    cause_ = DoneCause::TimeLimit;
  }

  result.done = done_;
  result.cause = cause_;
  result.statuses = statuses_;
  result.observations.resize(num_agents_);
  for (int i = 0; i < num_agents_; ++i) result.observations[i] = observe(i);
  return result;
}

}  // namespace cts
