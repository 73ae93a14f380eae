#pragma once

#include <deque>

namespace cts {

struct CurriculumConfig {
  bool adaptive = true;        // false: fixed difficulty (the w/o-AEC ablation)
  double fixed_epsilon = 0.3;  // used when adaptive == false
  double epsilon0 = 0.1;
  double delta = 0.1;          // per-adjustment change rate
  double sr_low = 0.20;
  double sr_high = 0.90;
  int window = 0;  // 0: cumulative success rate; >0: sliding window length

  void validate() const;  // throws std::invalid_argument
};

// Difficulty scheduler: the target-hiding probability epsilon rises by
// delta whenever the running success rate exceeds sr_high and falls when it
// drops below sr_low, clamped to [0, 1].
class Curriculum {
 public:
  explicit Curriculum(CurriculumConfig cfg);

  // Updates the success rate, bumps the episode counter, adjusts epsilon,
  // and returns the epsilon to spawn with.
  double on_episode_begin();

  void on_episode_end(bool success);

  double epsilon() const { return epsilon_; }
  double success_rate() const { return success_rate_; }
  long success_count() const { return success_count_; }
  long episode_count() const { return episode_count_; }

 private:
  CurriculumConfig cfg_;
  double epsilon_;
  double success_rate_ = 0.0;
  long success_count_ = 0;
  long episode_count_ = 0;
  std::deque<char> window_;
  long window_successes_ = 0;
};

}  // namespace cts
