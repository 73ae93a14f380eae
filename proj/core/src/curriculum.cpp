#include "cts/curriculum.hpp"

#include <algorithm>
#include <stdexcept>

namespace cts {

void CurriculumConfig::validate() const {
  if (!(sr_low >= 0.0 && sr_low < sr_high && sr_high <= 1.0))
    throw std::invalid_argument("curriculum: need 0 <= sr_low < sr_high <= 1");
  if (epsilon0 < 0.0 || epsilon0 > 1.0)
    throw std::invalid_argument("curriculum: epsilon0 must lie in [0, 1]");
  if (delta <= 0.0)
    throw std::invalid_argument("curriculum: delta must be positive");
  if (fixed_epsilon < 0.0 || fixed_epsilon > 1.0)
    throw std::invalid_argument("curriculum: fixed_epsilon must lie in [0, 1]");
  if (window < 0)
    throw std::invalid_argument("curriculum: window must be non-negative");
}

Curriculum::Curriculum(CurriculumConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  epsilon_ = cfg_.adaptive ? cfg_.epsilon0 : cfg_.fixed_epsilon;
}

double Curriculum::on_episode_begin() {
  if (episode_count_ != 0) {
    if (cfg_.window > 0)
      success_rate_ = window_.empty()
                          ? 0.0
                          : static_cast<double>(window_successes_) /
                                static_cast<double>(window_.size());
    else
      success_rate_ = static_cast<double>(success_count_) /
                      static_cast<double>(episode_count_);
  }
  ++episode_count_;
  if (cfg_.adaptive) {
    if (success_rate_ > cfg_.sr_high)
      epsilon_ = std::min(epsilon_ + cfg_.delta, 1.0);
    if (success_rate_ < cfg_.sr_low)
      epsilon_ = std::max(epsilon_ - cfg_.delta, 0.0);
  }
  return epsilon_;
}

void Curriculum::on_episode_end(bool success) {
  if (success) ++success_count_;
  if (cfg_.window > 0) {
    window_.push_back(success ? 1 : 0);
    window_successes_ += success ? 1 : 0;
    while (static_cast<int>(window_.size()) > cfg_.window) {
      window_successes_ -= window_.front();
      window_.pop_front();
    }
  }
}

}  // namespace cts
