#pragma once

#include <string>

#include "cts/curriculum.hpp"
#include "cts/dynamics.hpp"
#include "cts/policy.hpp"
#include "cts/ppo.hpp"
#include "cts/sensor.hpp"
#include "cts/world.hpp"

namespace cts {

struct StageConfig {
  int id = 1;
  int num_agents = 1;
  std::string init_checkpoint;  // stage 2 loads stage 1 here
  bool direct = false;          // stage 2 from scratch (ablation)
  long max_steps = 0;           // env-step budget; 0 falls back to ppo.max_steps

  void validate() const;  // throws std::invalid_argument
};

// Everything one training or evaluation run needs. The YAML file mirrors
// this struct; `world` may be an inline mapping or a path to a world file.
struct RunConfig {
  WorldConfig world;
  SensorConfig sensor;
  QuadParams quad;
  DynamicsMode dynamics = DynamicsMode::Kinematic;
  NetworkConfig net;
  PPOConfig ppo;
  CurriculumConfig curriculum;
  StageConfig stage;
  int workers = 1;

  Eigen::Vector4d action_bounds() const {
    return {quad.max_velocity_cmd, quad.max_velocity_cmd,
            quad.max_velocity_cmd, quad.max_yaw_rate_cmd};
  }
  void validate() const;
};

RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const YAML::Node& node, const std::string& base_dir);

// Full config echo, written alongside run outputs and checkpoint sidecars.
std::string dump_run_config(const RunConfig& cfg);

DynamicsMode parse_dynamics_mode(const std::string& name);
const char* to_string(DynamicsMode mode);

}  // namespace cts
