#pragma once

#include <Eigen/Core>
#include <vector>

#include "cts/policy.hpp"
#include "cts/rng.hpp"
#include "cts/rollout.hpp"

namespace cts {

struct PPOConfig {
  int batch_size = 2048;        // timesteps per minibatch
  int buffer_size = 10240;      // timesteps per update
  double learning_rate = 3e-4;
  double entropy_beta = 0.01;
  double clip_epsilon = 0.2;
  double gae_lambda = 0.95;
  int num_epochs = 3;
  long max_steps = 12000000;    // environment steps
  int num_checkpoints = 10;
  double gamma = 0.99;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  int num_envs = 18;
  int seq_len = 64;             // truncated-BPTT window
  bool linear_lr_decay = true;

  void validate() const;  // throws std::invalid_argument
};

class Adam {
 public:
  Adam() = default;
  explicit Adam(long n, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr);
  long iterations() const { return t_; }

 private:
  Eigen::VectorXd m_, v_;
  long t_ = 0;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
};

// Sequence chunks stacked into lockstep lanes, zero-padded to the longest
// chunk; column t*lanes + lane holds step t of a lane.
struct SequenceBatch {
  int len = 0;
  int lanes = 0;
  long timesteps = 0;  // real (mask == 1) steps
  Eigen::MatrixXd obs;
  Eigen::MatrixXd pre_squash;
  Eigen::VectorXd old_log_prob, advantage, ret, mask;
  Eigen::MatrixXd h0, c0;
};

struct LossStats {
  double total = 0;
  double policy = 0;
  double value = 0;
  double entropy = 0;
  double clip_fraction = 0;
};

// Clipped-surrogate loss with value and entropy terms over one sequence
// batch, with its full analytic gradient accumulated into `grad` (caller
// zeroes). This is the function the finite-difference oracle checks.
LossStats ppo_loss_and_grad(const PolicyParams& params,
                            const SequenceBatch& batch, const PPOConfig& cfg,
                            const Eigen::Vector4d& bounds,
                            Eigen::VectorXd& grad);

struct ChunkRef {
  const Stream* stream = nullptr;
  int start = 0;
  int len = 0;
  int snapshot = 0;  // index into stream->snapshots
};

std::vector<ChunkRef> build_chunks(const RolloutBuffer& buffer, int seq_len);

SequenceBatch assemble_batch(const std::vector<ChunkRef>& chunks,
                             const std::vector<std::vector<double>>& advantages,
                             const std::vector<std::vector<double>>& returns,
                             const RolloutBuffer& buffer, int hidden_size);

struct UpdateStats {
  double policy_loss = 0;
  double value_loss = 0;
  double entropy = 0;
  double clip_fraction = 0;
  double grad_norm = 0;
  double lr = 0;
  int minibatches = 0;
};

// Three epochs of shuffled minibatch updates over the buffer; advantages
// are GAE, normalized over the whole update batch. Throws on non-finite
// loss. The buffer is expected to be discarded afterwards (on-policy).
UpdateStats ppo_update(const RolloutBuffer& buffer, PolicyParams& params,
                       Adam& adam, const PPOConfig& cfg,
                       const Eigen::Vector4d& bounds, double lr, Rng& rng);

}  // namespace cts
