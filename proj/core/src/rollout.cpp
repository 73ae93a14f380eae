#include "cts/rollout.hpp"

#include <stdexcept>

namespace cts {

RolloutBuffer::RolloutBuffer(int num_envs, int num_agents)
    : num_envs_(num_envs), num_agents_(num_agents) {
  streams_.resize(static_cast<size_t>(num_envs) * num_agents);
  for (int e = 0; e < num_envs; ++e)
    for (int a = 0; a < num_agents; ++a) {
      streams_[index(e, a)].env = e;
      streams_[index(e, a)].agent = a;
    }
}

long RolloutBuffer::total() const {
  long n = 0;
  for (const auto& s : streams_) n += s.size();
  return n;
}

void RolloutBuffer::clear() {
  for (auto& s : streams_) {
    const int e = s.env, a = s.agent;
    s = Stream{};
    s.env = e;
    s.agent = a;
  }
}

void compute_gae(const std::vector<double>& rewards,
                 const std::vector<double>& values,
                 const std::vector<uint8_t>& dones,
                 const std::vector<uint8_t>& truncated,
                 const std::vector<double>& bootstrap, double gamma,
                 double lambda, std::vector<double>& advantages,
                 std::vector<double>& returns) {
  const size_t n = rewards.size();
  if (values.size() != n || dones.size() != n || truncated.size() != n ||
      bootstrap.size() != n)
    throw std::invalid_argument("compute_gae: sequence length mismatch");
  if (n > 0 && !dones[n - 1] && !truncated[n - 1])
    throw std::invalid_argument(
        "compute_gae: stream must end in a terminal or truncation");

  advantages.assign(n, 0.0);
  returns.assign(n, 0.0);
  double chain = 0.0;
  for (size_t i = n; i-- > 0;) {
    double delta;
    if (dones[i]) {
      delta = rewards[i] - values[i];
      chain = delta;
    } else if (truncated[i]) {
      delta = rewards[i] + gamma * bootstrap[i] - values[i];
      chain = delta;
    } else {
      delta = rewards[i] + gamma * values[i + 1] - values[i];
      chain = delta + gamma * lambda * chain;
    }
    advantages[i] = chain;
    returns[i] = chain + values[i];
  }
}

std::pair<std::vector<double>, std::vector<double>> compute_gae(
    const std::vector<double>& rewards, const std::vector<double>& values,
    const std::vector<uint8_t>& dones, double bootstrap_value, double gamma,
    double lambda) {
  const size_t n = rewards.size();
  std::vector<uint8_t> truncated(n, 0);
  std::vector<double> bootstrap(n, 0.0);
  if (n > 0 && !dones[n - 1]) {
    truncated[n - 1] = 1;
    bootstrap[n - 1] = bootstrap_value;
  }
  std::vector<double> adv, ret;
  compute_gae(rewards, values, dones, truncated, bootstrap, gamma, lambda, adv, ret);
  return {std::move(adv), std::move(ret)};
}

}  // namespace cts
