#pragma once

#include <string>
#include <vector>

#include "cts/geometry.hpp"

namespace YAML {
class Node;
}

namespace cts {

struct ObstacleBox {
  Aabb box;
  std::string name;
};

// Region B: the target is in plain sight when spawned here.
struct SpawnSphere {
  Vec3 center{Vec3::Zero()};
  double radius = 1.0;
};

struct AgentStart {
  Vec3 position{Vec3::Zero()};
  double yaw = 0.0;
};

struct RandomizationConfig {
  bool enabled = true;
  double target_scale_min = 0.2;   // m
  double target_scale_max = 0.3;   // m
  double target_yaw_min = 0.0;     // rad
  double target_yaw_max = 6.283185307179586;
  double agent_position_noise = 0.2;              // m, ball radius around ci
  double agent_yaw_noise = 0.5235987755982988;    // rad, +/-30 deg
};

struct WorldConfig {
  std::string name;
  Vec3 room{5.0, 5.0, 3.0};  // (w, l, h); interior is [0,w]x[0,l]x[0,h]
  std::vector<ObstacleBox> obstacles;
  SpawnSphere visible_region;       // B
  std::vector<Vec3> hidden_locations;  // C
  Aabb start_area;
  std::vector<AgentStart> agent_starts;
  int t_max = 5000;
  double alpha = 1.0;
  double beta = 0.1;
  double collision_radius = 0.12;  // m
  double reach_threshold = 0.12;   // m, distance from drone center to target shell
  int num_agents = 1;
  RandomizationConfig randomization;

  Aabb room_box() const { return {Vec3::Zero(), room}; }
  void validate() const;  // throws std::invalid_argument
};

WorldConfig parse_world(const YAML::Node& node);
WorldConfig load_world(const std::string& path);

}  // namespace cts
