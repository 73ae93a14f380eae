#include "cts/trace.hpp"

#include <json.hpp>

#include <stdexcept>

namespace cts {

using nlohmann::json;

namespace {

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

TraceWriter::TraceWriter(const std::string& path) : file_(path), os_(&file_) {
  if (!file_) throw std::runtime_error("trace: cannot open for writing: " + path);
}

TraceWriter::TraceWriter(std::ostream& os) : os_(&os) {}

void TraceWriter::episode_start(int episode, uint64_t seed,
                                const Environment& env) {
  json j{{"type", "episode_start"},
         {"episode", episode},
         {"seed", seed},
         {"epsilon", env.epsilon_used()},
         {"world", env.world().name},
         {"agents", env.num_agents()},
         {"target", vec3_json(env.target().position)},
         {"target_scale", env.target().scale},
         {"target_yaw", env.target().yaw},
         {"target_hidden", env.target().hidden}};
  *os_ << j.dump() << '\n';
}

void TraceWriter::step(const Environment& env,
                       const std::vector<VelocityCommand>& actions,
                       const StepResult& result) {
  json agents = json::array();
  for (int i = 0; i < env.num_agents(); ++i) {
    const QuadState& s = env.state(i);
    agents.push_back(
        {{"p", vec3_json(s.position)},
         {"v", vec3_json(s.velocity)},
         {"q", json::array({s.attitude[0], s.attitude[1], s.attitude[2],
                            s.attitude[3]})},
         {"action", json::array({actions[i].vx, actions[i].vy, actions[i].vz,
                                 actions[i].yaw_rate})},
         {"reward", result.rewards[i]},
         {"status", to_string(result.statuses[i].kind)}});
  }
  json events = json::array();
  for (const auto& e : result.events)
    events.push_back({{"agent", e.agent}, {"what", e.what}});
  json j{{"type", "step"},
         {"t", env.step_count()},
         {"agents", agents}};
  if (!events.empty()) j["events"] = events;
  *os_ << j.dump() << '\n';
}

void TraceWriter::episode_end(const Environment& env,
                              const std::vector<double>& cumulative_rewards) {
  json j{{"type", "episode_end"},
         {"t", env.step_count()},
         {"cause", to_string(env.done_cause())},
         {"success", env.done_cause() == DoneCause::Reached},
         {"cumulative_rewards", cumulative_rewards}};
  *os_ << j.dump() << '\n';
  os_->flush();
}

}  // namespace cts
