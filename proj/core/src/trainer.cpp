#include "cts/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "cts/checkpoint.hpp"

namespace cts {

namespace {

// One environment slot plus everything needed to resume its episode.
struct EnvSlot {
  std::unique_ptr<Environment> env;
  Rng action_rng;
  std::vector<RecurrentState> rec;
  std::vector<Eigen::VectorXd> obs;
  std::vector<int> steps_since_snapshot;
  std::vector<double> episode_reward;  // per-agent cumulative, env-level
  bool needs_reset = true;
};

}  // namespace

struct RolloutCollector::Impl {
  RunConfig cfg;
  uint64_t seed;
  std::vector<EnvSlot> slots;
  std::mutex curriculum_mutex;

  Impl(const RunConfig& c, uint64_t s) : cfg(c), seed(s) {
    slots.resize(static_cast<size_t>(cfg.ppo.num_envs));
    for (int e = 0; e < cfg.ppo.num_envs; ++e) {
      EnvSlot& slot = slots[static_cast<size_t>(e)];
      slot.env = std::make_unique<Environment>(
          cfg.world, cfg.sensor, cfg.quad, cfg.dynamics,
          derive_seed(seed, static_cast<uint64_t>(e), 0));
      slot.action_rng.seed(derive_seed(seed, static_cast<uint64_t>(e), 1));
      const int n = cfg.stage.num_agents;
      slot.rec.assign(static_cast<size_t>(n),
                      RecurrentState::zero(cfg.net.hidden_size));
      slot.obs.resize(static_cast<size_t>(n));
      slot.steps_since_snapshot.assign(static_cast<size_t>(n), 0);
      slot.episode_reward.assign(static_cast<size_t>(n), 0.0);
    }
  }

  void reset_slot(EnvSlot& slot, Curriculum& curriculum) {
    double eps;
    {
      std::lock_guard<std::mutex> lock(curriculum_mutex);
      eps = curriculum.on_episode_begin();
    }
    auto obs = slot.env->reset(eps);
    const int n = slot.env->num_agents();
    for (int a = 0; a < n; ++a) {
      slot.rec[static_cast<size_t>(a)] = RecurrentState::zero(cfg.net.hidden_size);
      slot.obs[static_cast<size_t>(a)] = std::move(obs[static_cast<size_t>(a)]);
      slot.steps_since_snapshot[static_cast<size_t>(a)] = 0;
      slot.episode_reward[static_cast<size_t>(a)] = 0.0;
    }
    slot.needs_reset = false;
  }

  // Runs the lockstep loop over slot indices [lo, hi) until the shared
  // transition counter reaches the buffer size.
  void run_worker(int lo, int hi, const PolicyParams& params,
                  Curriculum& curriculum, RolloutBuffer& buffer,
                  std::atomic<long>& transitions, CollectStats& stats,
                  std::mutex& stats_mutex) {
    const Eigen::Vector4d bounds = cfg.action_bounds();
    const long target = cfg.ppo.buffer_size;
    const int hidden = cfg.net.hidden_size;
    StepActivations acts;
    CollectStats local;

    while (transitions.load(std::memory_order_relaxed) < target) {
      for (int e = lo; e < hi; ++e) {
        EnvSlot& slot = slots[static_cast<size_t>(e)];
        if (slot.needs_reset) reset_slot(slot, curriculum);
        Environment& env = *slot.env;
        const int n = env.num_agents();

        // Column batch over this slot's active agents.
        std::vector<int> lanes;
        for (int a = 0; a < n; ++a)
          if (env.status(a).active()) lanes.push_back(a);
        if (lanes.empty()) continue;  // unreachable: episode would be done

        const int B = static_cast<int>(lanes.size());
        Eigen::MatrixXd obs_cols(cfg.net.obs_dim(), B);
        Eigen::MatrixXd h(hidden, B), c(hidden, B);
        for (int k = 0; k < B; ++k) {
          const size_t a = static_cast<size_t>(lanes[static_cast<size_t>(k)]);
          obs_cols.col(k) = slot.obs[a];
          h.col(k) = slot.rec[a].h;
          c.col(k) = slot.rec[a].c;
        }
        forward_step(params, obs_cols, h, c, acts);

        const Eigen::VectorXd log_std = params.clamped_log_std();
        std::vector<VelocityCommand> actions(static_cast<size_t>(n));
        std::vector<ActionSample> samples(static_cast<size_t>(B));
        for (int k = 0; k < B; ++k) {
          ActionDistribution dist{acts.mean.col(k), log_std, bounds};
          samples[static_cast<size_t>(k)] = sample_action(dist, slot.action_rng);
          actions[static_cast<size_t>(lanes[static_cast<size_t>(k)])] =
              VelocityCommand::from_vec(samples[static_cast<size_t>(k)].action);
        }

        const StepResult result = env.step(actions);

        for (int k = 0; k < B; ++k) {
          const int a = lanes[static_cast<size_t>(k)];
          const size_t au = static_cast<size_t>(a);
          Stream& stream = buffer.at(e, a);

          if (slot.steps_since_snapshot[au] % cfg.ppo.seq_len == 0)
            stream.snapshots.push_back(
                {stream.size(), slot.rec[au].h, slot.rec[au].c});

          stream.obs.push_back(slot.obs[au]);
          stream.pre_squash.push_back(samples[static_cast<size_t>(k)].pre_squash);
          stream.log_prob.push_back(samples[static_cast<size_t>(k)].log_prob);
          stream.value.push_back(acts.value(k));
          stream.reward.push_back(result.rewards[au]);

          const bool agent_terminal = !result.statuses[au].active();
          const bool team_terminal = result.done && result.cause == DoneCause::Reached;
          const bool time_limit = result.done && result.cause == DoneCause::TimeLimit;
          uint8_t done = (agent_terminal || team_terminal) ? 1 : 0;
          uint8_t trunc = 0;
          double boot = 0.0;
          if (!done && time_limit) {
            trunc = 1;
            const ForwardResult fr =
                forward(params, result.observations[au],
                        {acts.h.col(k), acts.c.col(k)}, bounds);
            boot = fr.value;
          }
          stream.done.push_back(done);
          stream.truncated.push_back(trunc);
          stream.bootstrap.push_back(boot);

          slot.rec[au] = {acts.h.col(k), acts.c.col(k)};
          slot.obs[au] = result.observations[au];
          ++slot.steps_since_snapshot[au];
          transitions.fetch_add(1, std::memory_order_relaxed);
        }
        for (int a = 0; a < n; ++a)
          slot.episode_reward[static_cast<size_t>(a)] += result.rewards[static_cast<size_t>(a)];
        ++local.env_steps;

        if (result.done) {
          const bool success = result.cause == DoneCause::Reached;
          {
            std::lock_guard<std::mutex> lock(curriculum_mutex);
            curriculum.on_episode_end(success);
          }
          ++local.episodes;
          local.successes += success ? 1 : 0;
          double mean_rew = 0.0;
          for (int a = 0; a < n; ++a)
            mean_rew += slot.episode_reward[static_cast<size_t>(a)];
          local.mean_cumulative_reward += mean_rew / n;
          local.mean_episode_length += env.step_count();
          slot.needs_reset = true;
        }
      }
    }

    std::lock_guard<std::mutex> lock(stats_mutex);
    stats.env_steps += local.env_steps;
    stats.episodes += local.episodes;
    stats.successes += local.successes;
    stats.mean_cumulative_reward += local.mean_cumulative_reward;
    stats.mean_episode_length += local.mean_episode_length;
  }

  // Mark open streams as truncated with a bootstrap value.
  void close_open_streams(const PolicyParams& params, RolloutBuffer& buffer) {
    const Eigen::Vector4d bounds = cfg.action_bounds();
    for (int e = 0; e < cfg.ppo.num_envs; ++e) {
      EnvSlot& slot = slots[static_cast<size_t>(e)];
      for (int a = 0; a < cfg.stage.num_agents; ++a) {
        Stream& stream = buffer.at(e, a);
        if (stream.size() == 0) continue;
        const int last = stream.size() - 1;
        if (stream.done[static_cast<size_t>(last)] ||
            stream.truncated[static_cast<size_t>(last)])
          continue;
        const ForwardResult fr =
            forward(params, slot.obs[static_cast<size_t>(a)],
                    slot.rec[static_cast<size_t>(a)], bounds);
        stream.truncated[static_cast<size_t>(last)] = 1;
        stream.bootstrap[static_cast<size_t>(last)] = fr.value;
      }
    }
  }
};

RolloutCollector::RolloutCollector(const RunConfig& cfg, uint64_t seed)
    : impl_(std::make_unique<Impl>(cfg, seed)) {}

RolloutCollector::~RolloutCollector() = default;

int RolloutCollector::num_envs() const { return impl_->cfg.ppo.num_envs; }

CollectStats RolloutCollector::collect(const PolicyParams& params,
                                       Curriculum& curriculum,
                                       RolloutBuffer& buffer) {
  if (!params.flat.allFinite())
    throw std::invalid_argument("collect: non-finite parameters");
  CollectStats stats;
  std::atomic<long> transitions{0};
  std::mutex stats_mutex;

  const int workers =
      std::max(1, std::min(impl_->cfg.workers, impl_->cfg.ppo.num_envs));
  if (workers == 1) {
    impl_->run_worker(0, impl_->cfg.ppo.num_envs, params, curriculum, buffer,
                      transitions, stats, stats_mutex);
  } else {
    std::vector<std::thread> threads;
    const int per = (impl_->cfg.ppo.num_envs + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const int lo = w * per;
      const int hi = std::min(impl_->cfg.ppo.num_envs, lo + per);
      if (lo >= hi) break;
      threads.emplace_back([&, lo, hi] {
        impl_->run_worker(lo, hi, params, curriculum, buffer, transitions,
                          stats, stats_mutex);
      });
    }
    for (auto& t : threads) t.join();
  }

  impl_->close_open_streams(params, buffer);
  if (stats.episodes > 0) {
    stats.mean_cumulative_reward /= static_cast<double>(stats.episodes);
    stats.mean_episode_length /= static_cast<double>(stats.episodes);
  }
  return stats;
}

namespace {

void write_metrics_header(std::ostream& os) {
  os << "iteration,env_steps,mean_cumulative_reward,success_rate,"
        "mean_episode_length,epsilon,policy_loss,value_loss,entropy,lr\n";
}

void write_metrics_row(std::ostream& os, const IterationMetrics& m) {
  os.precision(17);
  os << m.iteration << ',' << m.env_steps << ',' << m.mean_cumulative_reward
     << ',' << m.success_rate << ',' << m.mean_episode_length << ','
     << m.epsilon << ',' << m.policy_loss << ',' << m.value_loss << ','
     << m.entropy << ',' << m.lr << '\n';
}

}  // namespace

TrainResult train(const RunConfig& cfg, const TrainOptions& opts) {
  cfg.validate();
  if (opts.out_dir.empty())
    throw std::invalid_argument("train: output directory required");
  std::filesystem::create_directories(opts.out_dir);

  const std::string config_echo = dump_run_config(cfg);
  {
    std::ofstream os(opts.out_dir + "/config.yaml");
    os << config_echo << '\n';
  }

  PolicyParams params;
  if (!cfg.stage.init_checkpoint.empty() && !cfg.stage.direct) {
    params = load_checkpoint(cfg.stage.init_checkpoint);
    if (!params.net.same_shape(cfg.net))
      throw std::runtime_error(
          "train: init checkpoint network shape does not match the config");
  } else {
    params = PolicyParams::initialized(cfg.net, derive_seed(opts.seed, 0xA11C));
  }

  Adam adam(params.flat.size());
  Curriculum curriculum(cfg.curriculum);
  RolloutCollector collector(cfg, derive_seed(opts.seed, 0xC0111EC7));
  Rng update_rng(derive_seed(opts.seed, 0x0BDA7E));
  RolloutBuffer buffer(cfg.ppo.num_envs, cfg.stage.num_agents);

  const long max_steps =
      cfg.stage.max_steps > 0 ? cfg.stage.max_steps : cfg.ppo.max_steps;
  const Eigen::Vector4d bounds = cfg.action_bounds();

  TrainResult result;
  result.metrics_path = opts.out_dir + "/metrics.csv";
  std::ofstream metrics(result.metrics_path);
  if (!metrics) throw std::runtime_error("train: cannot write " + result.metrics_path);
  write_metrics_header(metrics);

  const auto save_ckpt = [&](const std::string& name, const PolicyParams& p) {
    const std::string path = opts.out_dir + "/" + name;
    save_checkpoint(p, path);
    std::ofstream sidecar(path + ".yaml");
    sidecar << config_echo << '\n';
    result.checkpoint_paths.push_back(path);
  };

  long env_steps = 0;
  long iteration = 0;
  int checkpoints_written = 0;
  IterationMetrics last{};

  while (env_steps < max_steps) {
    buffer.clear();
    const CollectStats cs = collector.collect(params, curriculum, buffer);
    env_steps += cs.env_steps;

    const double frac = std::min(
        1.0, static_cast<double>(env_steps) / static_cast<double>(max_steps));
    const double lr = cfg.ppo.linear_lr_decay
                          ? cfg.ppo.learning_rate * (1.0 - frac)
                          : cfg.ppo.learning_rate;

    const UpdateStats us =
        ppo_update(buffer, params, adam, cfg.ppo, bounds, lr, update_rng);
    ++iteration;

    IterationMetrics m;
    m.iteration = iteration;
    m.env_steps = env_steps;
    m.mean_cumulative_reward =
        cs.episodes > 0 ? cs.mean_cumulative_reward : last.mean_cumulative_reward;
    m.success_rate = cs.episodes > 0 ? static_cast<double>(cs.successes) /
                                           static_cast<double>(cs.episodes)
                                     : last.success_rate;
    m.mean_episode_length =
        cs.episodes > 0 ? cs.mean_episode_length : last.mean_episode_length;
    m.epsilon = curriculum.epsilon();
    m.policy_loss = us.policy_loss;
    m.value_loss = us.value_loss;
    m.entropy = us.entropy;
    m.lr = lr;
    write_metrics_row(metrics, m);
    metrics.flush();
    last = m;
    if (opts.on_iteration) opts.on_iteration(m);

    while (checkpoints_written < cfg.ppo.num_checkpoints &&
           env_steps >= (static_cast<long>(checkpoints_written) + 1) *
                            max_steps / cfg.ppo.num_checkpoints) {
      ++checkpoints_written;
      char name[64];
      std::snprintf(name, sizeof(name), "checkpoint_%03d.bin", checkpoints_written);
      save_ckpt(name, params);
    }
  }

  save_ckpt("checkpoint_final.bin", params);
  result.params = std::move(params);
  result.env_steps = env_steps;
  result.iterations = iteration;
  return result;
}

}  // namespace cts
