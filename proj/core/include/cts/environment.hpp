#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cts/dynamics.hpp"
#include "cts/geometry.hpp"
#include "cts/rng.hpp"
#include "cts/sensor.hpp"
#include "cts/world.hpp"

namespace cts {

enum class AgentStatusKind : int { Active = 0, Crashed = 1, Reached = 2 };

struct AgentStatus {
  AgentStatusKind kind = AgentStatusKind::Active;
  int event_step = -1;  // step index of the terminal event
  bool active() const { return kind == AgentStatusKind::Active; }
};

const char* to_string(AgentStatusKind kind);

struct TargetSpec {
  Vec3 position{Vec3::Zero()};
  double scale = 0.25;  // box side, m
  double yaw = 0.0;     // rad
  bool hidden = false;
  Obb box() const { return {position, Vec3::Constant(0.5 * scale), yaw}; }
};

// Flat observation vector: [ray block | p_W | q_WB | forward | a_prev | p_nj*].
// The layout is independent of the agent count, so one policy serves any
// swarm size.
struct ObservationLayout {
  int num_rays = 36;

  int ray_dim() const { return num_rays * (1 + kNumHitClasses); }
  int position_offset() const { return ray_dim(); }
  int quaternion_offset() const { return ray_dim() + 3; }
  int forward_offset() const { return ray_dim() + 7; }
  int last_action_offset() const { return ray_dim() + 10; }
  int teammate_offset() const { return ray_dim() + 14; }
  int total() const { return ray_dim() + 17; }
};

enum class DoneCause : int { None = 0, Reached = 1, AllCrashed = 2, TimeLimit = 3 };

const char* to_string(DoneCause cause);

struct StepEvent {
  int step = 0;
  int agent = 0;
  std::string what;  // "reach", "crash_wall", "crash_obstacle", "crash_teammate"
};

struct StepResult {
  std::vector<Eigen::VectorXd> observations;
  std::vector<double> rewards;
  std::vector<AgentStatus> statuses;
  bool done = false;
  DoneCause cause = DoneCause::None;
  Vec3 target_position{Vec3::Zero()};
  double epsilon_used = 0.0;
  std::vector<StepEvent> events;
};

enum class TerminalEvent { Reached, Crashed };

// Terminal rewards: +5 on reach; on crash the penalty scales with the
// remaining distance (normalized by the start distance) and the heading
// misalignment, on top of a constant -3.
double terminal_reward(TerminalEvent event, const Vec3& crash_position,
                       const Vec3& initial_position,
                       const Vec3& target_position, const Vec3& forward,
                       double alpha, double beta);

class Environment {
 public:
  Environment(WorldConfig world, SensorConfig sensor, QuadParams quad,
              DynamicsMode mode, uint64_t seed);

  void reseed(uint64_t seed);

  // Starts a new episode: spawns the target at difficulty epsilon, places
  // agents with domain randomization, zeroes velocities. Returns initial
  // observations.
  std::vector<Eigen::VectorXd> reset(double epsilon);

  // Advances every Active agent one step. Throws if the episode is over.
  StepResult step(const std::vector<VelocityCommand>& actions);

  // Draws a target per the spawning pdf: hidden set C with probability
  // epsilon, visible sphere B otherwise; redraws on overlap with obstacles
  // or walls. Throws after 100 failed attempts.
  TargetSpec spawn_target(double epsilon);

  // Relative position of the closest Active teammate; (0,0,0) when alone.
  // Ties break toward the lowest agent index.
  static Vec3 nearest_teammate(int self, const std::vector<Vec3>& positions,
                               const std::vector<AgentStatus>& statuses);

  Eigen::VectorXd observe(int agent) const;
  RayScene scene_for(int agent) const;

  int num_agents() const { return num_agents_; }
  const WorldConfig& world() const { return world_; }
  const SensorConfig& sensor() const { return sensor_; }
  const QuadParams& quad_params() const { return quad_; }
  DynamicsMode dynamics_mode() const { return mode_; }
  ObservationLayout layout() const { return {sensor_.num_rays()}; }
  const QuadState& state(int agent) const { return states_.at(agent); }
  const AgentStatus& status(int agent) const { return statuses_.at(agent); }
  const std::vector<AgentStatus>& statuses() const { return statuses_; }
  const TargetSpec& target() const { return target_; }
  double epsilon_used() const { return epsilon_used_; }
  int step_count() const { return step_count_; }
  bool done() const { return done_; }
  DoneCause done_cause() const { return cause_; }
  const Vec3& initial_position(int agent) const { return initial_positions_.at(agent); }
  const Eigen::Vector4d& last_action(int agent) const { return last_actions_.at(agent); }

 private:
  bool position_free(const Vec3& p, int up_to_agent) const;

  WorldConfig world_;
  SensorConfig sensor_;
  QuadParams quad_;
  DynamicsMode mode_;
  int num_agents_;
  Rng rng_;

  TargetSpec target_;
  double epsilon_used_ = 0.0;
  std::vector<QuadState> states_;
  std::vector<AgentStatus> statuses_;
  std::vector<Vec3> initial_positions_;
  std::vector<Eigen::Vector4d> last_actions_;
  int step_count_ = 0;
  bool done_ = true;  // reset() must run before step()
  DoneCause cause_ = DoneCause::None;
};

}  // namespace cts
