#include "cts/config.hpp"

#include <yaml-cpp/yaml.h>

#include <filesystem>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace cts {

void StageConfig::validate() const {
  if (id != 1 && id != 2)
    throw std::invalid_argument("stage config: id must be 1 or 2");
  if (num_agents < 1)
    throw std::invalid_argument("stage config: at least one agent required");
  if (id == 2 && init_checkpoint.empty() && !direct)
    throw std::invalid_argument(
        "stage config: stage 2 requires an init checkpoint unless running "
        "the direct ablation");
  if (max_steps < 0)
    throw std::invalid_argument("stage config: max_steps must be non-negative");
}

void RunConfig::validate() const {
  world.validate();
  sensor.validate();
  quad.validate();
  net.validate();
  ppo.validate();
  curriculum.validate();
  stage.validate();
  if (net.num_rays != sensor.num_rays())
    throw std::invalid_argument(
        "run config: network num_rays must match the sensor ray count");
  if (net.nonvisual_dim != 17)
    throw std::invalid_argument("run config: non-visual observation block is 17 wide");
  if (workers < 1)
    throw std::invalid_argument("run config: workers must be positive");
  if (stage.num_agents > static_cast<int>(world.agent_starts.size()))
    throw std::invalid_argument(
        "run config: stage requests more agents than the world provides starts for");
}

DynamicsMode parse_dynamics_mode(const std::string& name) {
  if (name == "kinematic") return DynamicsMode::Kinematic;
  if (name == "rigid" || name == "rigid_body") return DynamicsMode::RigidBody;
  throw std::invalid_argument("unknown dynamics mode: " + name);
}

const char* to_string(DynamicsMode mode) {
  return mode == DynamicsMode::Kinematic ? "kinematic" : "rigid";
}

RunConfig parse_run_config(const YAML::Node& node, const std::string& base_dir) {
  RunConfig cfg;
  if (!node.IsMap()) throw std::invalid_argument("run config: expected a mapping");

  const YAML::Node wn = node["world"];
  if (!wn) throw std::invalid_argument("run config: missing world");
  if (wn.IsScalar()) {
    std::filesystem::path p = wn.as<std::string>();
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    cfg.world = load_world(p.string());
  } else {
    cfg.world = parse_world(wn);
  }
  if (const YAML::Node ov = node["world_overrides"]) {
    if (ov["t_max"]) cfg.world.t_max = ov["t_max"].as<int>();
    if (ov["reach_threshold"]) cfg.world.reach_threshold = ov["reach_threshold"].as<double>();
    if (ov["collision_radius"]) cfg.world.collision_radius = ov["collision_radius"].as<double>();
    if (ov["alpha"]) cfg.world.alpha = ov["alpha"].as<double>();
    if (ov["beta"]) cfg.world.beta = ov["beta"].as<double>();
    if (ov["randomization_enabled"])
      cfg.world.randomization.enabled = ov["randomization_enabled"].as<bool>();
  }

  if (const YAML::Node sn = node["sensor"]) {
    if (sn["num_azimuths"]) cfg.sensor.num_azimuths = sn["num_azimuths"].as<int>();
    if (sn["num_elevations"]) cfg.sensor.num_elevations = sn["num_elevations"].as<int>();
    if (sn["azimuth_span_deg"])
      cfg.sensor.azimuth_span = sn["azimuth_span_deg"].as<double>() * std::numbers::pi / 180.0;
    if (sn["elevation_span_deg"])
      cfg.sensor.elevation_span = sn["elevation_span_deg"].as<double>() * std::numbers::pi / 180.0;
    if (sn["max_range"]) cfg.sensor.max_range = sn["max_range"].as<double>();
  }

  if (const YAML::Node dn = node["dynamics"]) {
    if (dn["mode"]) cfg.dynamics = parse_dynamics_mode(dn["mode"].as<std::string>());
    if (dn["dt"]) cfg.quad.dt = dn["dt"].as<double>();
    if (dn["mass"]) cfg.quad.mass = dn["mass"].as<double>();
    if (dn["max_thrust"]) cfg.quad.max_thrust = dn["max_thrust"].as<double>();
    if (dn["max_body_rate"]) cfg.quad.max_body_rate = dn["max_body_rate"].as<double>();
    if (dn["max_velocity_cmd"]) cfg.quad.max_velocity_cmd = dn["max_velocity_cmd"].as<double>();
    if (dn["max_yaw_rate_cmd"]) cfg.quad.max_yaw_rate_cmd = dn["max_yaw_rate_cmd"].as<double>();
    if (dn["velocity_gain"]) cfg.quad.velocity_gain = dn["velocity_gain"].as<double>();
    if (dn["attitude_gain"]) cfg.quad.attitude_gain = dn["attitude_gain"].as<double>();
    if (dn["velocity_tau"]) cfg.quad.velocity_tau = dn["velocity_tau"].as<double>();
    if (dn["yaw_rate_tau"]) cfg.quad.yaw_rate_tau = dn["yaw_rate_tau"].as<double>();
  }

  if (const YAML::Node nn = node["network"]) {
    if (nn["encoder_hidden"]) cfg.net.encoder_hidden = nn["encoder_hidden"].as<int>();
    if (nn["encoder_out"]) cfg.net.encoder_out = nn["encoder_out"].as<int>();
    if (nn["trunk_width"]) cfg.net.trunk_width = nn["trunk_width"].as<int>();
    if (nn["hidden_size"]) cfg.net.hidden_size = nn["hidden_size"].as<int>();
    if (nn["log_std_init"]) cfg.net.log_std_init = nn["log_std_init"].as<double>();
  }
  cfg.net.num_rays = cfg.sensor.num_rays();

  if (const YAML::Node pn = node["ppo"]) {
    if (pn["batch_size"]) cfg.ppo.batch_size = pn["batch_size"].as<int>();
    if (pn["buffer_size"]) cfg.ppo.buffer_size = pn["buffer_size"].as<int>();
    if (pn["learning_rate"]) cfg.ppo.learning_rate = pn["learning_rate"].as<double>();
    if (pn["beta"]) cfg.ppo.entropy_beta = pn["beta"].as<double>();
    if (pn["clip_epsilon"]) cfg.ppo.clip_epsilon = pn["clip_epsilon"].as<double>();
    if (pn["lambda"]) cfg.ppo.gae_lambda = pn["lambda"].as<double>();
    if (pn["epochs"]) cfg.ppo.num_epochs = pn["epochs"].as<int>();
    if (pn["max_steps"]) cfg.ppo.max_steps = pn["max_steps"].as<long>();
    if (pn["checkpoints"]) cfg.ppo.num_checkpoints = pn["checkpoints"].as<int>();
    if (pn["gamma"]) cfg.ppo.gamma = pn["gamma"].as<double>();
    if (pn["value_coef"]) cfg.ppo.value_coef = pn["value_coef"].as<double>();
    if (pn["max_grad_norm"]) cfg.ppo.max_grad_norm = pn["max_grad_norm"].as<double>();
    if (pn["num_envs"]) cfg.ppo.num_envs = pn["num_envs"].as<int>();
    if (pn["seq_len"]) cfg.ppo.seq_len = pn["seq_len"].as<int>();
    if (pn["lr_schedule"]) {
      const auto s = pn["lr_schedule"].as<std::string>();
      if (s == "linear") cfg.ppo.linear_lr_decay = true;
      else if (s == "constant") cfg.ppo.linear_lr_decay = false;
      else throw std::invalid_argument("run config: unknown lr_schedule " + s);
    }
  }

  if (const YAML::Node cn = node["curriculum"]) {
    if (cn["adaptive"]) cfg.curriculum.adaptive = cn["adaptive"].as<bool>();
    if (cn["fixed_epsilon"]) cfg.curriculum.fixed_epsilon = cn["fixed_epsilon"].as<double>();
    if (cn["epsilon0"]) cfg.curriculum.epsilon0 = cn["epsilon0"].as<double>();
    if (cn["delta"]) cfg.curriculum.delta = cn["delta"].as<double>();
    if (cn["sr_low"]) cfg.curriculum.sr_low = cn["sr_low"].as<double>();
    if (cn["sr_high"]) cfg.curriculum.sr_high = cn["sr_high"].as<double>();
    if (cn["window"]) cfg.curriculum.window = cn["window"].as<int>();
  }

  if (const YAML::Node tn = node["stage"]) {
    if (tn["id"]) cfg.stage.id = tn["id"].as<int>();
    if (tn["agents"]) cfg.stage.num_agents = tn["agents"].as<int>();
    if (tn["init_checkpoint"]) {
      std::filesystem::path p = tn["init_checkpoint"].as<std::string>();
      if (!p.empty() && p.is_relative()) p = std::filesystem::path(base_dir) / p;
      cfg.stage.init_checkpoint = p.string();
    }
    if (tn["direct"]) cfg.stage.direct = tn["direct"].as<bool>();
    if (tn["max_steps"]) cfg.stage.max_steps = tn["max_steps"].as<long>();
  }

  if (node["workers"]) cfg.workers = node["workers"].as<int>();

  cfg.world.num_agents = cfg.stage.num_agents;
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  if (!std::filesystem::exists(path))
    throw std::runtime_error("config file not found: " + path);
  YAML::Node node = YAML::LoadFile(path);
  return parse_run_config(node, std::filesystem::path(path).parent_path().string());
}

namespace {

YAML::Node vec3_node(const Vec3& v) {
  YAML::Node n(YAML::NodeType::Sequence);
  n.SetStyle(YAML::EmitterStyle::Flow);
  n.push_back(v.x());
  n.push_back(v.y());
  n.push_back(v.z());
  return n;
}

}  // namespace

std::string dump_run_config(const RunConfig& cfg) {
  YAML::Node root;

  YAML::Node w;
  w["name"] = cfg.world.name;
  w["room"] = vec3_node(cfg.world.room);
  for (const auto& o : cfg.world.obstacles) {
    YAML::Node on;
    on["name"] = o.name;
    on["min"] = vec3_node(o.box.min);
    on["max"] = vec3_node(o.box.max);
    w["obstacles"].push_back(on);
  }
  w["visible_region"]["center"] = vec3_node(cfg.world.visible_region.center);
  w["visible_region"]["radius"] = cfg.world.visible_region.radius;
  for (const auto& c : cfg.world.hidden_locations)
    w["hidden_locations"].push_back(vec3_node(c));
  w["start"]["area"]["min"] = vec3_node(cfg.world.start_area.min);
  w["start"]["area"]["max"] = vec3_node(cfg.world.start_area.max);
  for (const auto& s : cfg.world.agent_starts) {
    YAML::Node an;
    an["position"] = vec3_node(s.position);
    an["yaw"] = s.yaw;
    w["start"]["agents"].push_back(an);
  }
  w["t_max"] = cfg.world.t_max;
  w["alpha"] = cfg.world.alpha;
  w["beta"] = cfg.world.beta;
  w["collision_radius"] = cfg.world.collision_radius;
  w["reach_threshold"] = cfg.world.reach_threshold;
  w["num_agents"] = cfg.world.num_agents;
  w["randomization"]["enabled"] = cfg.world.randomization.enabled;
  w["randomization"]["target_scale"].push_back(cfg.world.randomization.target_scale_min);
  w["randomization"]["target_scale"].push_back(cfg.world.randomization.target_scale_max);
  root["world"] = w;

  root["sensor"]["num_azimuths"] = cfg.sensor.num_azimuths;
  root["sensor"]["num_elevations"] = cfg.sensor.num_elevations;
  root["sensor"]["max_range"] = cfg.sensor.max_range;

  root["dynamics"]["mode"] = to_string(cfg.dynamics);
  root["dynamics"]["dt"] = cfg.quad.dt;
  root["dynamics"]["max_velocity_cmd"] = cfg.quad.max_velocity_cmd;
  root["dynamics"]["max_yaw_rate_cmd"] = cfg.quad.max_yaw_rate_cmd;
  root["dynamics"]["velocity_tau"] = cfg.quad.velocity_tau;

  root["network"]["encoder_hidden"] = cfg.net.encoder_hidden;
  root["network"]["encoder_out"] = cfg.net.encoder_out;
  root["network"]["trunk_width"] = cfg.net.trunk_width;
  root["network"]["hidden_size"] = cfg.net.hidden_size;
  root["network"]["log_std_init"] = cfg.net.log_std_init;

  root["ppo"]["batch_size"] = cfg.ppo.batch_size;
  root["ppo"]["buffer_size"] = cfg.ppo.buffer_size;
  root["ppo"]["learning_rate"] = cfg.ppo.learning_rate;
  root["ppo"]["beta"] = cfg.ppo.entropy_beta;
  root["ppo"]["clip_epsilon"] = cfg.ppo.clip_epsilon;
  root["ppo"]["lambda"] = cfg.ppo.gae_lambda;
  root["ppo"]["epochs"] = cfg.ppo.num_epochs;
  root["ppo"]["max_steps"] = static_cast<int64_t>(cfg.ppo.max_steps);
  root["ppo"]["checkpoints"] = cfg.ppo.num_checkpoints;
  root["ppo"]["gamma"] = cfg.ppo.gamma;
  root["ppo"]["value_coef"] = cfg.ppo.value_coef;
  root["ppo"]["max_grad_norm"] = cfg.ppo.max_grad_norm;
  root["ppo"]["num_envs"] = cfg.ppo.num_envs;
  root["ppo"]["seq_len"] = cfg.ppo.seq_len;
  root["ppo"]["lr_schedule"] = cfg.ppo.linear_lr_decay ? "linear" : "constant";

  root["curriculum"]["adaptive"] = cfg.curriculum.adaptive;
  root["curriculum"]["fixed_epsilon"] = cfg.curriculum.fixed_epsilon;
  root["curriculum"]["epsilon0"] = cfg.curriculum.epsilon0;
  root["curriculum"]["delta"] = cfg.curriculum.delta;
  root["curriculum"]["sr_low"] = cfg.curriculum.sr_low;
  root["curriculum"]["sr_high"] = cfg.curriculum.sr_high;
  root["curriculum"]["window"] = cfg.curriculum.window;

  root["stage"]["id"] = cfg.stage.id;
  root["stage"]["agents"] = cfg.stage.num_agents;
  root["stage"]["init_checkpoint"] = cfg.stage.init_checkpoint;
  root["stage"]["direct"] = cfg.stage.direct;
  root["stage"]["max_steps"] = static_cast<int64_t>(cfg.stage.max_steps);

  root["workers"] = cfg.workers;

  std::ostringstream oss;
  oss << root;
  return oss.str();
}

}  // namespace cts
