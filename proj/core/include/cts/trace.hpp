#pragma once

#include <cstdint>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "cts/environment.hpp"

namespace cts {

// JSON-lines episode traces: an episode_start record, one record per step,
// and an episode_end record.
class TraceWriter {
 public:
  explicit TraceWriter(const std::string& path);
  explicit TraceWriter(std::ostream& os);  // non-owning

  void episode_start(int episode, uint64_t seed, const Environment& env);
  void step(const Environment& env, const std::vector<VelocityCommand>& actions,
            const StepResult& result);
  void episode_end(const Environment& env,
                   const std::vector<double>& cumulative_rewards);

 private:
  std::ofstream file_;
  std::ostream* os_ = nullptr;
};

}  // namespace cts
