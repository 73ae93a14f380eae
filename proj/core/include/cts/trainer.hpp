#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "cts/config.hpp"
#include "cts/curriculum.hpp"
#include "cts/environment.hpp"
#include "cts/ppo.hpp"

namespace cts {

struct IterationMetrics {
  long iteration = 0;
  long env_steps = 0;
  double mean_cumulative_reward = 0;
  double success_rate = 0;
  double mean_episode_length = 0;
  double epsilon = 0;
  double policy_loss = 0;
  double value_loss = 0;
  double entropy = 0;
  double lr = 0;
};

struct CollectStats {
  long env_steps = 0;
  long episodes = 0;
  long successes = 0;
  double mean_cumulative_reward = 0;
  double mean_episode_length = 0;
};

// Persistent pool of environments stepped in lockstep under a parameter
// snapshot. Episodes span update boundaries; recurrent states carry over.
class RolloutCollector {
 public:
  RolloutCollector(const RunConfig& cfg, uint64_t seed);
  ~RolloutCollector();

  // Fills the buffer to >= cfg.ppo.buffer_size transitions.
  CollectStats collect(const PolicyParams& params, Curriculum& curriculum,
                       RolloutBuffer& buffer);

  int num_envs() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct TrainOptions {
  std::string out_dir;
  uint64_t seed = 0;
  // Invoked after each iteration; acceptance checks hook in here.
  std::function<void(const IterationMetrics&)> on_iteration;
};

struct TrainResult {
  PolicyParams params;
  std::vector<std::string> checkpoint_paths;
  std::string metrics_path;
  long env_steps = 0;
  long iterations = 0;
};

// Alternates rollout collection and PPO updates until the stage budget,
// writing metrics.csv, evenly spaced checkpoints and a config echo under
// opts.out_dir.
TrainResult train(const RunConfig& cfg, const TrainOptions& opts);

}  // namespace cts
