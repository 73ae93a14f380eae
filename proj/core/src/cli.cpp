#include "cts/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cts/checkpoint.hpp"
#include "cts/config.hpp"
#include "cts/eval.hpp"
#include "cts/export.hpp"
#include "cts/trainer.hpp"

namespace cts::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string resolve_room(const std::string& entry, const std::string& worlds_dir) {
  if (fs::exists(entry)) return entry;
  const fs::path candidate = fs::path(worlds_dir) / ("room_" + entry + ".yaml");
  if (fs::exists(candidate)) return candidate.string();
  throw std::runtime_error("eval: cannot resolve room '" + entry +
                           "' (looked for " + candidate.string() + ")");
}

void write_reports(const std::vector<EvalReport>& reports,
                   const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream csv(out_dir + "/report.csv");
  csv.precision(17);
  csv << "world,room_w,room_l,room_h,agents,episodes,successes,success_rate,"
         "mean_time_steps,epsilon,seed\n";
  json jreports = json::array();
  for (const auto& r : reports) {
    csv << r.world_name << ',' << r.room_dims.x() << ',' << r.room_dims.y()
        << ',' << r.room_dims.z() << ',' << r.num_agents << ',' << r.episodes
        << ',' << r.successes << ',' << r.success_rate << ','
        << r.mean_time_steps << ',' << r.epsilon << ',' << r.seed << '\n';
    jreports.push_back({{"world", r.world_name},
                        {"room", {r.room_dims.x(), r.room_dims.y(), r.room_dims.z()}},
                        {"agents", r.num_agents},
                        {"episodes", r.episodes},
                        {"successes", r.successes},
                        {"success_rate", r.success_rate},
                        {"mean_time_steps", r.mean_time_steps},
                        {"epsilon", r.epsilon},
                        {"seed", r.seed}});
  }
  std::ofstream js(out_dir + "/report.json");
  js << jreports.dump(1) << '\n';
}

void print_report_line(const EvalReport& r) {
  std::printf("%-16s N=%d  episodes=%d  success=%.1f%%  mean_steps=%.1f\n",
              r.world_name.c_str(), r.num_agents, r.episodes,
              100.0 * r.success_rate, r.mean_time_steps);
}

struct TrainArgs {
  std::string config_path, out_dir, init_checkpoint;
  uint64_t seed = 0;
  int stage = 0;
  int agents = 0;
  bool direct = false;
  bool no_aec = false;
  double fixed_epsilon = -1.0;
  long max_steps = 0;
  int workers = 0;
  int num_envs = 0;
};

int run_train(const TrainArgs& a) {
  RunConfig cfg = load_run_config(a.config_path);
  if (a.stage > 0) cfg.stage.id = a.stage;
  if (a.agents > 0) cfg.stage.num_agents = a.agents;
  else if (a.stage == 2 && cfg.stage.num_agents < 2) cfg.stage.num_agents = 2;
  if (!a.init_checkpoint.empty()) cfg.stage.init_checkpoint = a.init_checkpoint;
  if (a.direct) cfg.stage.direct = true;
  if (a.no_aec) cfg.curriculum.adaptive = false;
  if (a.fixed_epsilon >= 0.0) {
    cfg.curriculum.adaptive = false;
    cfg.curriculum.fixed_epsilon = a.fixed_epsilon;
  }
  if (a.max_steps > 0) cfg.stage.max_steps = a.max_steps;
  if (a.workers > 0) cfg.workers = a.workers;
  if (a.num_envs > 0) cfg.ppo.num_envs = a.num_envs;
  cfg.world.num_agents = cfg.stage.num_agents;
  cfg.validate();

  TrainOptions opts;
  opts.out_dir = a.out_dir;
  opts.seed = a.seed;
  opts.on_iteration = [](const IterationMetrics& m) {
    std::printf(
        "iter %5ld  steps %9ld  reward %8.3f  success %5.1f%%  len %7.1f  "
        "eps %.2f  lr %.2e\n",
        m.iteration, m.env_steps, m.mean_cumulative_reward,
        100.0 * m.success_rate, m.mean_episode_length, m.epsilon, m.lr);
    std::fflush(stdout);
  };
  const TrainResult result = train(cfg, opts);
  std::printf("done: %ld env steps, %ld iterations, %zu checkpoints -> %s\n",
              result.env_steps, result.iterations,
              result.checkpoint_paths.size(), a.out_dir.c_str());
  return 0;
}

struct EvalArgs {
  std::string checkpoint, config_path, worlds_dir = "data/worlds";
  std::string rooms = "5x5x3";
  std::string agents = "1";
  int episodes = 500;
  double epsilon = 0.3;
  uint64_t seed = 0;
  bool deterministic = false;
  bool traces = false;
  int workers = 1;
  std::string out_dir = "eval_out";
  std::string dynamics;
};

int run_eval(const EvalArgs& a) {
  const PolicyParams params = load_checkpoint(a.checkpoint);

  RunConfig base;
  std::string base_source;
  if (!a.config_path.empty()) {
    base = load_run_config(a.config_path);
    base_source = a.config_path;
  } else if (fs::exists(a.checkpoint + ".yaml")) {
    base = load_run_config(a.checkpoint + ".yaml");
    base_source = a.checkpoint + ".yaml";
  }
  if (base_source.empty()) {
    // Defaults: base.sensor/quad as constructed.
    base.net = params.net;
  }
  if (!a.dynamics.empty()) base.dynamics = parse_dynamics_mode(a.dynamics);
  if (base.sensor.num_rays() != params.net.num_rays)
    throw std::invalid_argument(
        "eval: sensor ray count does not match the checkpoint network");

  std::vector<EvalReport> reports;
  for (const auto& room : split_list(a.rooms)) {
    const WorldConfig wc = load_world(resolve_room(room, a.worlds_dir));
    for (const auto& agents_str : split_list(a.agents)) {
      const int n = std::stoi(agents_str);
      RunConfig cfg = base;
      cfg.net = params.net;
      cfg.world = wc;
      cfg.world.num_agents = n;
      cfg.stage.num_agents = n;
      cfg.stage.id = n > 1 ? 2 : 1;
      cfg.stage.direct = true;  // stage contract is irrelevant for eval
      cfg.validate();

      EvalOptions opts;
      opts.episodes = a.episodes;
      opts.epsilon = a.epsilon;
      opts.seed = a.seed;
      opts.workers = a.workers;
      if (a.traces) {
        fs::create_directories(a.out_dir);
        opts.trace_path = a.out_dir + "/trace_" + wc.name + "_N" +
                          std::to_string(n) + ".jsonl";
      }
      const Eigen::Vector4d bounds = cfg.action_bounds();
      const bool det = a.deterministic;
      const EvalReport r = evaluate(
          cfg,
          [&params, bounds, det] {
            return std::make_unique<NetworkPolicy>(params, bounds, det);
          },
          opts);
      print_report_line(r);
      reports.push_back(r);
    }
  }
  write_reports(reports, a.out_dir);
  {
    std::ofstream echo(a.out_dir + "/eval_config.yaml");
    echo << "checkpoint: " << a.checkpoint << "\nepisodes: " << a.episodes
         << "\nepsilon: " << a.epsilon << "\nseed: " << a.seed
         << "\ndeterministic: " << (a.deterministic ? "true" : "false")
         << "\nrooms: " << a.rooms << "\nagents: " << a.agents
         << "\nbase_config: " << base_source << '\n';
  }
  std::printf("wrote %s/report.csv (%zu cells)\n", a.out_dir.c_str(),
              reports.size());
  return 0;
}

struct OracleArgs {
  std::string policy = "straight";
  std::string world_path;
  int agents = 1;
  int episodes = 100;
  double epsilon = 0.0;
  uint64_t seed = 0;
  int workers = 1;
  std::string out_dir;
  std::string dynamics = "kinematic";
  bool traces = false;
};

int run_oracle(const OracleArgs& a) {
  RunConfig cfg;
  cfg.world = load_world(a.world_path);
  cfg.world.num_agents = a.agents;
  cfg.stage.num_agents = a.agents;
  cfg.stage.id = a.agents > 1 ? 2 : 1;
  cfg.stage.direct = true;
  cfg.dynamics = parse_dynamics_mode(a.dynamics);
  cfg.validate();

  EvalOptions opts;
  opts.episodes = a.episodes;
  opts.epsilon = a.epsilon;
  opts.seed = a.seed;
  opts.workers = a.workers;
  if (a.traces) {
    fs::create_directories(a.out_dir.empty() ? "." : a.out_dir);
    opts.trace_path = (a.out_dir.empty() ? std::string(".") : a.out_dir) +
                      "/trace_oracle_" + a.policy + ".jsonl";
  }

  const Eigen::Vector4d bounds = cfg.action_bounds();
  PolicyFactory factory;
  if (a.policy == "straight") {
    factory = [bounds] { return std::make_unique<StraightLinePolicy>(bounds); };
  } else if (a.policy == "random") {
    factory = [bounds] { return std::make_unique<RandomPolicy>(bounds); };
  } else {
    throw std::invalid_argument("oracle: unknown policy '" + a.policy +
                                "' (use straight or random)");
  }
  const EvalReport r = evaluate(cfg, factory, opts);
  print_report_line(r);
  if (!a.out_dir.empty()) write_reports({r}, a.out_dir);
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Collaborative target search: training, evaluation and export"};
  app.require_subcommand(1);

  TrainArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "Run one training stage");
  train_cmd->add_option("--config", train_args.config_path, "Run config YAML")
      ->required();
  train_cmd->add_option("--out", train_args.out_dir, "Output directory")->required();
  train_cmd->add_option("--seed", train_args.seed, "Run seed");
  train_cmd->add_option("--stage", train_args.stage, "Stage id (1 or 2)");
  train_cmd->add_option("--agents", train_args.agents, "Agent count override");
  train_cmd->add_option("--init", train_args.init_checkpoint,
                        "Init checkpoint (stage 2)");
  train_cmd->add_flag("--direct", train_args.direct,
                      "Stage 2 from scratch (ablation)");
  train_cmd->add_flag("--no-aec", train_args.no_aec,
                      "Disable the adaptive curriculum (fixed epsilon)");
  train_cmd->add_option("--fixed-epsilon", train_args.fixed_epsilon,
                        "Fixed difficulty; implies --no-aec");
  train_cmd->add_option("--max-steps", train_args.max_steps,
                        "Env-step budget override");
  train_cmd->add_option("--workers", train_args.workers, "Rollout workers");
  train_cmd->add_option("--num-envs", train_args.num_envs,
                        "Parallel environment count");

  EvalArgs eval_args;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "Evaluate a checkpoint over rooms x swarm sizes");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint file")
      ->required();
  eval_cmd->add_option("--config", eval_args.config_path,
                       "Base config (default: checkpoint sidecar)");
  eval_cmd->add_option("--rooms", eval_args.rooms,
                       "Comma list of room names or world files");
  eval_cmd->add_option("--agents", eval_args.agents, "Comma list of agent counts");
  eval_cmd->add_option("--worlds-dir", eval_args.worlds_dir,
                       "Directory with room_<name>.yaml files");
  eval_cmd->add_option("--episodes", eval_args.episodes, "Episodes per cell");
  eval_cmd->add_option("--epsilon", eval_args.epsilon, "Task difficulty");
  eval_cmd->add_option("--seed", eval_args.seed, "Evaluation seed");
  eval_cmd->add_flag("--deterministic", eval_args.deterministic,
                     "Squashed-mean actions instead of sampling");
  eval_cmd->add_flag("--traces", eval_args.traces, "Write episode traces");
  eval_cmd->add_option("--workers", eval_args.workers, "Parallel workers");
  eval_cmd->add_option("--out", eval_args.out_dir, "Output directory");
  eval_cmd->add_option("--dynamics", eval_args.dynamics,
                       "Dynamics mode override (kinematic|rigid)");

  OracleArgs oracle_args;
  CLI::App* oracle_cmd = app.add_subcommand(
      "oracle", "Run scripted policies for environment validation");
  oracle_cmd->add_option("--policy", oracle_args.policy, "straight|random");
  oracle_cmd->add_option("--world", oracle_args.world_path, "World YAML")
      ->required();
  oracle_cmd->add_option("--agents", oracle_args.agents, "Agent count");
  oracle_cmd->add_option("--episodes", oracle_args.episodes, "Episode count");
  oracle_cmd->add_option("--epsilon", oracle_args.epsilon, "Task difficulty");
  oracle_cmd->add_option("--seed", oracle_args.seed, "Seed");
  oracle_cmd->add_option("--workers", oracle_args.workers, "Parallel workers");
  oracle_cmd->add_option("--out", oracle_args.out_dir, "Output directory");
  oracle_cmd->add_option("--dynamics", oracle_args.dynamics,
                         "Dynamics mode (kinematic|rigid)");
  oracle_cmd->add_flag("--traces", oracle_args.traces, "Write episode traces");

  std::vector<std::string> export_inputs;
  std::string export_out = "export_out";
  CLI::App* export_cmd = app.add_subcommand(
      "export", "Aggregate metrics/traces into plot-ready files");
  export_cmd->add_option("inputs", export_inputs,
                         "Run directories, metrics CSVs or trace files");
  export_cmd->add_option("--out", export_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (train_cmd->parsed()) return run_train(train_args);
    if (eval_cmd->parsed()) return run_eval(eval_args);
    if (oracle_cmd->parsed()) return run_oracle(oracle_args);
    if (export_cmd->parsed()) {
      const ExportResult r = export_run(export_inputs, export_out);
      std::printf("export: %d run(s) -> %s, %d episode(s) -> %s\n", r.num_runs,
                  r.curves_path.c_str(), r.num_episodes,
                  r.polylines_path.c_str());
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

}  // namespace cts::cli
