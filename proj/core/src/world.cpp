#include "cts/world.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <stdexcept>

namespace cts {

namespace {

Vec3 parse_vec3(const YAML::Node& n, const char* what) {
  if (!n || !n.IsSequence() || n.size() != 3)
    throw std::invalid_argument(std::string("world config: ") + what +
                                " must be a 3-element sequence");
  return {n[0].as<double>(), n[1].as<double>(), n[2].as<double>()};
}

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

}  // namespace

void WorldConfig::validate() const {
  const Aabb rb = room_box();
  if (!(room.x() > 0 && room.y() > 0 && room.z() > 0))
    throw std::invalid_argument("world config: room extents must be positive");
  if (visible_region.radius <= 0)
    throw std::invalid_argument("world config: visible region radius must be positive");
  for (int a = 0; a < 3; ++a) {
    if (visible_region.center[a] - visible_region.radius < rb.min[a] ||
        visible_region.center[a] + visible_region.radius > rb.max[a])
      throw std::invalid_argument("world config: visible region must lie inside the room");
  }
  if (hidden_locations.empty())
    throw std::invalid_argument("world config: at least one hidden location required");
  for (const auto& c : hidden_locations)
    if (!rb.contains(c))
      throw std::invalid_argument("world config: hidden location outside the room");
  for (const auto& o : obstacles)
    if ((o.box.min.array() > o.box.max.array()).any())
      throw std::invalid_argument("world config: obstacle box with min > max");
  if (t_max <= 0) throw std::invalid_argument("world config: t_max must be positive");
  if (alpha < 0 || beta < 0)
    throw std::invalid_argument("world config: reward weights must be non-negative");
  if (collision_radius <= 0 || reach_threshold <= 0)
    throw std::invalid_argument("world config: radii must be positive");
  if (num_agents < 1)
    throw std::invalid_argument("world config: at least one agent required");
  if (num_agents > static_cast<int>(agent_starts.size()))
    throw std::invalid_argument(
        "world config: more agents requested than start positions provided");
  for (const auto& s : agent_starts)
    if (!rb.contains(s.position))
      throw std::invalid_argument("world config: agent start outside the room");
}

WorldConfig parse_world(const YAML::Node& node) {
  WorldConfig w;
  if (!node.IsMap()) throw std::invalid_argument("world config: expected a mapping");
  if (node["name"]) w.name = node["name"].as<std::string>();
  w.room = parse_vec3(node["room"], "room");

  if (node["obstacles"]) {
    for (const auto& on : node["obstacles"]) {
      ObstacleBox o;
      o.box.min = parse_vec3(on["min"], "obstacle min");
      o.box.max = parse_vec3(on["max"], "obstacle max");
      if (on["name"]) o.name = on["name"].as<std::string>();
      w.obstacles.push_back(std::move(o));
    }
  }

  const YAML::Node vr = node["visible_region"];
  if (!vr) throw std::invalid_argument("world config: missing visible_region");
  w.visible_region.center = parse_vec3(vr["center"], "visible_region center");
  w.visible_region.radius = vr["radius"].as<double>();

  const YAML::Node hl = node["hidden_locations"];
  if (!hl) throw std::invalid_argument("world config: missing hidden_locations");
  for (const auto& c : hl) w.hidden_locations.push_back(parse_vec3(c, "hidden location"));

  const YAML::Node st = node["start"];
  if (!st) throw std::invalid_argument("world config: missing start");
  w.start_area.min = parse_vec3(st["area"]["min"], "start area min");
  w.start_area.max = parse_vec3(st["area"]["max"], "start area max");
  for (const auto& an : st["agents"]) {
    AgentStart s;
    s.position = parse_vec3(an["position"], "agent start position");
    if (an["yaw_deg"]) s.yaw = deg2rad(an["yaw_deg"].as<double>());
    else if (an["yaw"]) s.yaw = an["yaw"].as<double>();
    w.agent_starts.push_back(s);
  }

  if (node["t_max"]) w.t_max = node["t_max"].as<int>();
  if (node["alpha"]) w.alpha = node["alpha"].as<double>();
  if (node["beta"]) w.beta = node["beta"].as<double>();
  if (node["collision_radius"]) w.collision_radius = node["collision_radius"].as<double>();
  if (node["reach_threshold"]) w.reach_threshold = node["reach_threshold"].as<double>();
  if (node["num_agents"]) w.num_agents = node["num_agents"].as<int>();

  if (const YAML::Node rn = node["randomization"]) {
    RandomizationConfig& r = w.randomization;
    if (rn["enabled"]) r.enabled = rn["enabled"].as<bool>();
    if (rn["target_scale"]) {
      r.target_scale_min = rn["target_scale"][0].as<double>();
      r.target_scale_max = rn["target_scale"][1].as<double>();
    }
    if (rn["target_yaw_deg"]) {
      r.target_yaw_min = deg2rad(rn["target_yaw_deg"][0].as<double>());
      r.target_yaw_max = deg2rad(rn["target_yaw_deg"][1].as<double>());
    }
    if (rn["agent_position_noise"]) r.agent_position_noise = rn["agent_position_noise"].as<double>();
    if (rn["agent_yaw_noise_deg"]) r.agent_yaw_noise = deg2rad(rn["agent_yaw_noise_deg"].as<double>());
  }

  w.validate();
  return w;
}

WorldConfig load_world(const std::string& path) {
  if (!std::filesystem::exists(path))
    throw std::runtime_error("world file not found: " + path);
  YAML::Node node = YAML::LoadFile(path);
  WorldConfig w = parse_world(node);
  if (w.name.empty()) w.name = std::filesystem::path(path).stem().string();
  return w;
}

}  // namespace cts
