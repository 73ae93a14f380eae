#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

namespace cts {

// Transitions of one (env, agent) pair, time ordered across episodes.
// `done` marks true terminals (crash / team reach); `truncated` marks
// time-limit or buffer-end cuts, which bootstrap from the stored value of
// the next observation instead of zero.
struct Stream {
  int env = 0;
  int agent = 0;
  std::vector<Eigen::VectorXd> obs;
  std::vector<Eigen::Vector4d> pre_squash;
  std::vector<double> log_prob;
  std::vector<double> value;
  std::vector<double> reward;
  std::vector<uint8_t> done;
  std::vector<uint8_t> truncated;
  std::vector<double> bootstrap;  // value of next obs where truncated[t] == 1

  // Recurrent state entering the step at `index`; recorded every seq_len
  // steps within an episode so updates can replay chunks.
  struct Snapshot {
    int index = 0;
    Eigen::VectorXd h, c;
  };
  std::vector<Snapshot> snapshots;

  int size() const { return static_cast<int>(reward.size()); }
};

class RolloutBuffer {
 public:
  RolloutBuffer(int num_envs, int num_agents);

  Stream& at(int env, int agent) { return streams_[index(env, agent)]; }
  const Stream& at(int env, int agent) const { return streams_[index(env, agent)]; }
  std::vector<Stream>& streams() { return streams_; }
  const std::vector<Stream>& streams() const { return streams_; }

  long total() const;
  void clear();

  int num_envs() const { return num_envs_; }
  int num_agents() const { return num_agents_; }

 private:
  size_t index(int env, int agent) const {
    return static_cast<size_t>(env) * num_agents_ + agent;
  }
  int num_envs_;
  int num_agents_;
  std::vector<Stream> streams_;
};

// Standard GAE recursion over one stream. Terminals zero the bootstrap and
// reset the lambda chain; truncations bootstrap from `bootstrap[t]`.
// Throws on length mismatch.
void compute_gae(const std::vector<double>& rewards,
                 const std::vector<double>& values,
                 const std::vector<uint8_t>& dones,
                 const std::vector<uint8_t>& truncated,
                 const std::vector<double>& bootstrap, double gamma,
                 double lambda, std::vector<double>& advantages,
                 std::vector<double>& returns);

// Single-episode convenience: the trailing transition bootstraps from
// `bootstrap_value` unless it is a terminal.
std::pair<std::vector<double>, std::vector<double>> compute_gae(
    const std::vector<double>& rewards, const std::vector<double>& values,
    const std::vector<uint8_t>& dones, double bootstrap_value, double gamma,
    double lambda);

}  // namespace cts
