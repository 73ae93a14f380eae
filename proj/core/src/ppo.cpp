#include "cts/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace cts {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;
constexpr double kHalfLog2PiE = 1.4189385332046727;

double stable_log_one_minus_tanh_sq(double u) {
  const double sp = -2.0 * u > 0.0
                        ? -2.0 * u + std::log1p(std::exp(2.0 * u))
                        : std::log1p(std::exp(-2.0 * u));
  return 2.0 * (std::numbers::ln2 - u - sp);
}

}  // namespace

void PPOConfig::validate() const {
  if (batch_size <= 0 || buffer_size <= 0)
    throw std::invalid_argument("ppo config: batch and buffer sizes must be positive");
  if (buffer_size % batch_size != 0)
    throw std::invalid_argument("ppo config: buffer size must be divisible by batch size");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("ppo config: gamma must lie in [0, 1)");
  if (clip_epsilon <= 0.0)
    throw std::invalid_argument("ppo config: clip epsilon must be positive");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0))
    throw std::invalid_argument("ppo config: lambda must lie in [0, 1]");
  if (num_epochs <= 0 || num_envs <= 0 || seq_len <= 0 || max_steps <= 0)
    throw std::invalid_argument("ppo config: counts must be positive");
  if (learning_rate <= 0.0 || value_coef < 0.0 || entropy_beta < 0.0 ||
      max_grad_norm <= 0.0)
    throw std::invalid_argument("ppo config: invalid coefficients");
}

Adam::Adam(long n, double beta1, double beta2, double eps)
    : m_(Eigen::VectorXd::Zero(n)),
      v_(Eigen::VectorXd::Zero(n)),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps) {}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw std::invalid_argument("adam: size mismatch");
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = (beta2_ * v_.array() + (1.0 - beta2_) * grad.array().square()).matrix();
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -=
      lr * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + eps_);
}

std::vector<ChunkRef> build_chunks(const RolloutBuffer& buffer, int seq_len) {
  std::vector<ChunkRef> chunks;
  for (const auto& s : buffer.streams()) {
    for (size_t k = 0; k < s.snapshots.size(); ++k) {
      const int start = s.snapshots[k].index;
      const int end = (k + 1 < s.snapshots.size()) ? s.snapshots[k + 1].index
                                                   : s.size();
      const int len = end - start;
      if (len <= 0) continue;
      if (len > seq_len)
        throw std::logic_error("build_chunks: chunk longer than seq_len");
      chunks.push_back({&s, start, len, static_cast<int>(k)});
    }
  }
  return chunks;
}

SequenceBatch assemble_batch(const std::vector<ChunkRef>& chunks,
                             const std::vector<std::vector<double>>& advantages,
                             const std::vector<std::vector<double>>& returns,
                             const RolloutBuffer& buffer, int hidden_size) {
  SequenceBatch b;
  b.lanes = static_cast<int>(chunks.size());
  if (b.lanes == 0) return b;
  for (const auto& c : chunks) b.len = std::max(b.len, c.len);

  const int obs_dim = static_cast<int>(chunks[0].stream->obs[0].size());
  const long cols = static_cast<long>(b.len) * b.lanes;
  b.obs = Eigen::MatrixXd::Zero(obs_dim, cols);
  b.pre_squash = Eigen::MatrixXd::Zero(4, cols);
  b.old_log_prob = Eigen::VectorXd::Zero(cols);
  b.advantage = Eigen::VectorXd::Zero(cols);
  b.ret = Eigen::VectorXd::Zero(cols);
  b.mask = Eigen::VectorXd::Zero(cols);
  b.h0 = Eigen::MatrixXd::Zero(hidden_size, b.lanes);
  b.c0 = Eigen::MatrixXd::Zero(hidden_size, b.lanes);

  const auto& streams = buffer.streams();
  for (int lane = 0; lane < b.lanes; ++lane) {
    const ChunkRef& c = chunks[lane];
    const size_t sidx = static_cast<size_t>(c.stream - streams.data());
    b.h0.col(lane) = c.stream->snapshots[c.snapshot].h;
    b.c0.col(lane) = c.stream->snapshots[c.snapshot].c;
    for (int t = 0; t < c.len; ++t) {
      const long col = static_cast<long>(t) * b.lanes + lane;
      const int i = c.start + t;
      b.obs.col(col) = c.stream->obs[i];
      b.pre_squash.col(col) = c.stream->pre_squash[i];
      b.old_log_prob[col] = c.stream->log_prob[i];
      b.advantage[col] = advantages[sidx][i];
      b.ret[col] = returns[sidx][i];
      b.mask[col] = 1.0;
      ++b.timesteps;
    }
  }
  return b;
}

LossStats ppo_loss_and_grad(const PolicyParams& params,
                            const SequenceBatch& batch, const PPOConfig& cfg,
                            const Eigen::Vector4d& bounds,
                            Eigen::VectorXd& grad) {
  LossStats stats;
  if (batch.timesteps == 0) return stats;
  if (!params.flat.allFinite())
    throw std::invalid_argument("ppo_loss_and_grad: non-finite parameters");

  const int lanes = batch.lanes;
  const int len = batch.len;
  const double inv_n = 1.0 / static_cast<double>(batch.timesteps);

  const Eigen::VectorXd log_std_raw = params.layout.vec(params.flat, kLogStd);
  const Eigen::VectorXd log_std = params.clamped_log_std();
  const Eigen::Vector4d sigma = log_std.array().exp();

  // Forward through the whole padded window, keeping activations.
  std::vector<StepActivations> acts(static_cast<size_t>(len));
  {
    Eigen::MatrixXd h = batch.h0;
    Eigen::MatrixXd c = batch.c0;
    for (int t = 0; t < len; ++t) {
      forward_step(params, batch.obs.middleCols(static_cast<long>(t) * lanes, lanes),
                   h, c, acts[static_cast<size_t>(t)]);
      h = acts[static_cast<size_t>(t)].h;
      c = acts[static_cast<size_t>(t)].c;
    }
  }

  // Per-sample loss terms and head gradients.
  std::vector<Eigen::MatrixXd> d_means(static_cast<size_t>(len));
  std::vector<Eigen::RowVectorXd> d_values(static_cast<size_t>(len));
  Eigen::Vector4d d_log_std = Eigen::Vector4d::Zero();
  long clipped = 0;

  const double entropy = log_std.sum() + 4.0 * kHalfLog2PiE;

  for (int t = 0; t < len; ++t) {
    auto& dm = d_means[static_cast<size_t>(t)];
    auto& dv = d_values[static_cast<size_t>(t)];
    dm = Eigen::MatrixXd::Zero(4, lanes);
    dv = Eigen::RowVectorXd::Zero(lanes);
    const auto& a = acts[static_cast<size_t>(t)];
    for (int lane = 0; lane < lanes; ++lane) {
      const long col = static_cast<long>(t) * lanes + lane;
      if (batch.mask[col] == 0.0) continue;

      const Eigen::Vector4d u = batch.pre_squash.col(col);
      const Eigen::Vector4d mean = a.mean.col(lane);
      double lp = 0.0;
      Eigen::Vector4d z;
      for (int i = 0; i < 4; ++i) {
        z[i] = (u[i] - mean[i]) / sigma[i];
        lp += -0.5 * z[i] * z[i] - log_std[i] - kHalfLog2Pi;
        lp -= stable_log_one_minus_tanh_sq(u[i]);
        lp -= std::log(bounds[i]);
      }

      const double adv = batch.advantage[col];
      const double ratio = std::exp(lp - batch.old_log_prob[col]);
      const double clamped =
          std::clamp(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon);
      const double s1 = ratio * adv;
      const double s2 = clamped * adv;
      const bool unclipped_active = s1 <= s2;
      if (ratio < 1.0 - cfg.clip_epsilon || ratio > 1.0 + cfg.clip_epsilon)
        ++clipped;

      const double v = a.value(lane);
      const double verr = v - batch.ret[col];

      stats.policy += -std::min(s1, s2);
      stats.value += cfg.value_coef * verr * verr;

      // d(policy)/d(lp) = -adv * ratio when the unclipped branch is active.
      const double g_lp = unclipped_active ? (-adv * ratio) * inv_n : 0.0;
      for (int i = 0; i < 4; ++i) {
        dm(i, lane) = g_lp * (z[i] / sigma[i]);
        d_log_std[i] += g_lp * (z[i] * z[i] - 1.0);
      }
      dv(lane) = 2.0 * cfg.value_coef * verr * inv_n;
    }
  }

  stats.policy *= inv_n;
  stats.value *= inv_n;
  stats.entropy = entropy;
  stats.total = stats.policy + stats.value - cfg.entropy_beta * entropy;
  stats.clip_fraction = static_cast<double>(clipped) * inv_n;

  if (!std::isfinite(stats.total)) {
    std::ostringstream oss;
    oss << "ppo_loss_and_grad: non-finite loss (policy=" << stats.policy
        << ", value=" << stats.value << ", entropy=" << stats.entropy << ")";
    throw std::runtime_error(oss.str());
  }

  d_log_std.array() -= cfg.entropy_beta;

  // Clamp is flat outside (log_std_min, log_std_max).
  for (int i = 0; i < 4; ++i) {
    if (log_std_raw[i] <= params.net.log_std_min ||
        log_std_raw[i] >= params.net.log_std_max)
      d_log_std[i] = 0.0;
  }
  params.layout.vec(grad, kLogStd) += d_log_std;

  // Backward through time.
  const int h_size = params.net.hidden_size;
  Eigen::MatrixXd d_h = Eigen::MatrixXd::Zero(h_size, lanes);
  Eigen::MatrixXd d_c = Eigen::MatrixXd::Zero(h_size, lanes);
  for (int t = len - 1; t >= 0; --t)
    backward_step(params, acts[static_cast<size_t>(t)],
                  d_means[static_cast<size_t>(t)],
                  d_values[static_cast<size_t>(t)], d_h, d_c, grad);

  return stats;
}

UpdateStats ppo_update(const RolloutBuffer& buffer, PolicyParams& params,
                       Adam& adam, const PPOConfig& cfg,
                       const Eigen::Vector4d& bounds, double lr, Rng& rng) {
  const auto& streams = buffer.streams();
  std::vector<std::vector<double>> advantages(streams.size());
  std::vector<std::vector<double>> returns(streams.size());
  for (size_t i = 0; i < streams.size(); ++i) {
    const Stream& s = streams[i];
    if (s.size() == 0) continue;
    compute_gae(s.reward, s.value, s.done, s.truncated, s.bootstrap, cfg.gamma,
                cfg.gae_lambda, advantages[i], returns[i]);
  }

  // Normalize advantages over the whole update batch.
  double sum = 0.0, sum2 = 0.0;
  long n = 0;
  for (const auto& a : advantages)
    for (const double v : a) {
      sum += v;
      sum2 += v * v;
      ++n;
    }
  if (n > 0) {
    const double mean = sum / static_cast<double>(n);
    const double var = std::max(sum2 / static_cast<double>(n) - mean * mean, 0.0);
    const double inv_std = 1.0 / (std::sqrt(var) + 1e-8);
    for (auto& a : advantages)
      for (double& v : a) v = (v - mean) * inv_std;
  }

  std::vector<ChunkRef> chunks = build_chunks(buffer, cfg.seq_len);
  const int lanes_per_batch =
      std::max(1, cfg.batch_size / cfg.seq_len);

  UpdateStats stats;
  stats.lr = lr;
  Eigen::VectorXd grad(params.flat.size());

  for (int epoch = 0; epoch < cfg.num_epochs; ++epoch) {
    // Fisher-Yates with the trainer RNG for reproducible shuffles.
    for (size_t i = chunks.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(uniform(rng) * static_cast<double>(i));
      std::swap(chunks[i - 1], chunks[std::min(j, i - 1)]);
    }
    for (size_t begin = 0; begin < chunks.size();
         begin += static_cast<size_t>(lanes_per_batch)) {
      const size_t end =
          std::min(begin + static_cast<size_t>(lanes_per_batch), chunks.size());
      const std::vector<ChunkRef> group(chunks.begin() + static_cast<long>(begin),
                                        chunks.begin() + static_cast<long>(end));
      const SequenceBatch batch = assemble_batch(group, advantages, returns,
                                                 buffer, params.net.hidden_size);
      if (batch.timesteps == 0) continue;

      grad.setZero();
      const LossStats ls = ppo_loss_and_grad(params, batch, cfg, bounds, grad);

      double gnorm = grad.norm();
      if (gnorm > cfg.max_grad_norm && gnorm > 0.0)
        grad *= cfg.max_grad_norm / gnorm;
      if (lr > 0.0) adam.step(params.flat, grad, lr);

      stats.policy_loss += ls.policy;
      stats.value_loss += ls.value;
      stats.entropy += ls.entropy;
      stats.clip_fraction += ls.clip_fraction;
      stats.grad_norm += gnorm;
      ++stats.minibatches;
    }
  }

  if (stats.minibatches > 0) {
    const double inv = 1.0 / stats.minibatches;
    stats.policy_loss *= inv;
    stats.value_loss *= inv;
    stats.entropy *= inv;
    stats.clip_fraction *= inv;
    stats.grad_norm *= inv;
  }
  return stats;
}

}  // namespace cts
