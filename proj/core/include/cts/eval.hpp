#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "cts/config.hpp"
#include "cts/environment.hpp"
#include "cts/policy.hpp"

namespace cts {

// Action source for evaluation episodes.
class AgentPolicy {
 public:
  virtual ~AgentPolicy() = default;
  virtual void begin_episode(const Environment& env) = 0;
  virtual std::vector<VelocityCommand> act(
      const Environment& env, const std::vector<Eigen::VectorXd>& obs,
      Rng& rng) = 0;
};

class NetworkPolicy : public AgentPolicy {
 public:
  NetworkPolicy(PolicyParams params, Eigen::Vector4d bounds, bool deterministic);
  void begin_episode(const Environment& env) override;
  std::vector<VelocityCommand> act(const Environment& env,
                                   const std::vector<Eigen::VectorXd>& obs,
                                   Rng& rng) override;

 private:
  PolicyParams params_;
  Eigen::Vector4d bounds_;
  bool deterministic_;
  std::vector<RecurrentState> rec_;
};

// Privileged straight-line controller that flies directly at the target;
// an environment sanity oracle, not a learned policy.
class StraightLinePolicy : public AgentPolicy {
 public:
  explicit StraightLinePolicy(Eigen::Vector4d bounds) : bounds_(bounds) {}
  void begin_episode(const Environment&) override {}
  std::vector<VelocityCommand> act(const Environment& env,
                                   const std::vector<Eigen::VectorXd>& obs,
                                   Rng& rng) override;

 private:
  Eigen::Vector4d bounds_;
};

class RandomPolicy : public AgentPolicy {
 public:
  explicit RandomPolicy(Eigen::Vector4d bounds) : bounds_(bounds) {}
  void begin_episode(const Environment&) override {}
  std::vector<VelocityCommand> act(const Environment& env,
                                   const std::vector<Eigen::VectorXd>& obs,
                                   Rng& rng) override;

 private:
  Eigen::Vector4d bounds_;
};

using PolicyFactory = std::function<std::unique_ptr<AgentPolicy>()>;

struct EvalOptions {
  int episodes = 500;
  double epsilon = 0.3;
  int workers = 1;
  uint64_t seed = 0;
  std::string trace_path;  // optional JSONL output
};

struct EvalReport {
  std::string world_name;
  Vec3 room_dims{Vec3::Zero()};
  int num_agents = 0;
  int episodes = 0;
  long successes = 0;
  double success_rate = 0.0;
  double mean_time_steps = 0.0;  // over successful episodes; 0 when none
  double epsilon = 0.0;
  uint64_t seed = 0;
};

// Runs fixed-difficulty episodes under the given policy. Each episode is
// seeded from (seed, episode index), so the report is bit-identical at any
// worker count.
EvalReport evaluate(const RunConfig& cfg, const PolicyFactory& make_policy,
                    const EvalOptions& opts);

}  // namespace cts
