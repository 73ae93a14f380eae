#include "cts/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "cts/trace.hpp"

namespace cts {

NetworkPolicy::NetworkPolicy(PolicyParams params, Eigen::Vector4d bounds,
                             bool deterministic)
    : params_(std::move(params)), bounds_(bounds), deterministic_(deterministic) {}

void NetworkPolicy::begin_episode(const Environment& env) {
  rec_.assign(static_cast<size_t>(env.num_agents()),
              RecurrentState::zero(params_.net.hidden_size));
}

std::vector<VelocityCommand> NetworkPolicy::act(
    const Environment& env, const std::vector<Eigen::VectorXd>& obs, Rng& rng) {
  std::vector<VelocityCommand> cmds(static_cast<size_t>(env.num_agents()));
  for (int a = 0; a < env.num_agents(); ++a) {
    if (!env.status(a).active()) continue;
    const ForwardResult fr =
        forward(params_, obs[static_cast<size_t>(a)], rec_[static_cast<size_t>(a)], bounds_);
    rec_[static_cast<size_t>(a)] = fr.state;
    if (deterministic_) {
      cmds[static_cast<size_t>(a)] =
          VelocityCommand::from_vec(deterministic_action(fr.dist));
    } else {
      cmds[static_cast<size_t>(a)] =
          VelocityCommand::from_vec(sample_action(fr.dist, rng).action);
    }
  }
  return cmds;
}

std::vector<VelocityCommand> StraightLinePolicy::act(
    const Environment& env, const std::vector<Eigen::VectorXd>&, Rng&) {
  std::vector<VelocityCommand> cmds(static_cast<size_t>(env.num_agents()));
  for (int a = 0; a < env.num_agents(); ++a) {
    if (!env.status(a).active()) continue;
    const QuadState& s = env.state(a);
    const Vec3 d = env.target().position - s.position;
    const double dist = d.norm();
    if (dist < 1e-9) continue;
    const double speed = std::min(bounds_[0], 2.0 * dist);
    const Vec3 v_world = d * (speed / dist);
    const Vec3 v_body = body_to_world(s.attitude).transpose() * v_world;

    VelocityCommand& c = cmds[static_cast<size_t>(a)];
    c.vx = v_body.x();
    c.vy = v_body.y();
    c.vz = v_body.z();
    const double desired_yaw = std::atan2(d.y(), d.x());
    double err = desired_yaw - quat_yaw(s.attitude);
    while (err > std::numbers::pi) err -= 2 * std::numbers::pi;
    while (err < -std::numbers::pi) err += 2 * std::numbers::pi;
    c.yaw_rate = std::clamp(2.0 * err, -bounds_[3], bounds_[3]);
  }
  return cmds;
}

std::vector<VelocityCommand> RandomPolicy::act(
    const Environment& env, const std::vector<Eigen::VectorXd>&, Rng& rng) {
  std::vector<VelocityCommand> cmds(static_cast<size_t>(env.num_agents()));
  for (int a = 0; a < env.num_agents(); ++a) {
    if (!env.status(a).active()) continue;
    VelocityCommand& c = cmds[static_cast<size_t>(a)];
    c.vx = uniform(rng, -bounds_[0], bounds_[0]);
    c.vy = uniform(rng, -bounds_[1], bounds_[1]);
    c.vz = uniform(rng, -bounds_[2], bounds_[2]);
    c.yaw_rate = uniform(rng, -bounds_[3], bounds_[3]);
  }
  return cmds;
}

namespace {

struct EpisodeOutcome {
  bool success = false;
  int steps = 0;
  std::string trace;
};

}  // namespace

EvalReport evaluate(const RunConfig& cfg, const PolicyFactory& make_policy,
                    const EvalOptions& opts) {
  if (opts.episodes <= 0)
    throw std::invalid_argument("evaluate: episode count must be positive");

  std::vector<EpisodeOutcome> outcomes(static_cast<size_t>(opts.episodes));
  std::atomic<int> next{0};
  const bool want_traces = !opts.trace_path.empty();

  const auto worker = [&] {
    Environment env(cfg.world, cfg.sensor, cfg.quad, cfg.dynamics, 0);
    auto policy = make_policy();
    Rng action_rng;
    for (;;) {
      const int ep = next.fetch_add(1);
      if (ep >= opts.episodes) break;
      env.reseed(derive_seed(opts.seed, static_cast<uint64_t>(ep), 2));
      action_rng.seed(derive_seed(opts.seed, static_cast<uint64_t>(ep), 3));

      std::ostringstream trace_buf;
      std::unique_ptr<TraceWriter> trace;
      auto obs = env.reset(opts.epsilon);
      policy->begin_episode(env);
      if (want_traces) {
        trace = std::make_unique<TraceWriter>(trace_buf);
        trace->episode_start(ep, opts.seed, env);
      }

      std::vector<double> cum(static_cast<size_t>(env.num_agents()), 0.0);
      while (!env.done()) {
        const auto cmds = policy->act(env, obs, action_rng);
        const StepResult r = env.step(cmds);
        obs = r.observations;
        for (int a = 0; a < env.num_agents(); ++a)
          cum[static_cast<size_t>(a)] += r.rewards[static_cast<size_t>(a)];
        if (trace) trace->step(env, cmds, r);
      }
      if (trace) trace->episode_end(env, cum);

      EpisodeOutcome& out = outcomes[static_cast<size_t>(ep)];
      out.success = env.done_cause() == DoneCause::Reached;
      out.steps = env.step_count();
      if (want_traces) out.trace = trace_buf.str();
    }
  };

  const int workers = std::max(1, opts.workers);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  EvalReport report;
  report.world_name = cfg.world.name;
  report.room_dims = cfg.world.room;
  report.num_agents = cfg.world.num_agents;
  report.episodes = opts.episodes;
  report.epsilon = opts.epsilon;
  report.seed = opts.seed;
  long step_sum = 0;
  for (const auto& o : outcomes) {
    if (o.success) {
      ++report.successes;
      step_sum += o.steps;
    }
  }
  report.success_rate =
      static_cast<double>(report.successes) / static_cast<double>(opts.episodes);
  report.mean_time_steps =
      report.successes > 0
          ? static_cast<double>(step_sum) / static_cast<double>(report.successes)
          : 0.0;

  if (want_traces) {
    std::ofstream os(opts.trace_path);
    if (!os) throw std::runtime_error("evaluate: cannot write " + opts.trace_path);
    for (const auto& o : outcomes) os << o.trace;
  }
  return report;
}

}  // namespace cts
