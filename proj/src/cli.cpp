#include "spard/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <vector>

#include "CLI11.hpp"
#include "spard/pawa.hpp"
#include "spard/simenv.hpp"
#include "spard/state.hpp"
#include "spard/trajectory_io.hpp"

namespace spard {
namespace {

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kIo: return kExitIo;
    case ErrorCode::kDataFormat: return kExitDataFormat;
    default: return kExitConfig;
  }
}

SchedulerConfig load_config(const CommonOptions& common) {
  SchedulerConfig config = common.config_path ? load_config_file(*common.config_path)
                                              : SchedulerConfig{};
  if (common.seed) config.seed = *common.seed;
  if (common.scenario) config.scenario = *common.scenario;
  if (common.freeze_scheduler) config.interval_k = kNeverUpdate;
  if (common.sample_by_weight) config.sample_by_weight = true;
  check_config(config);
  return config;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  return in;
}

}  // namespace

int cmd_run(const RunCommand& cmd, std::ostream& out, std::ostream& err) {
  try {
    if (cmd.steps < 1) {
      err << "error: steps must be >= 1\n";
      return kExitConfig;
    }
    SchedulerConfig config = load_config(cmd.common);
    Scenario scenario = resolve_scenario(config);
    ExecutionOptions exec;
    exec.reduction = reduction_order_from_env();

    std::ofstream traj = open_out(cmd.out_path);
    std::ofstream log;
    if (cmd.reward_log_path) log = open_out(*cmd.reward_log_path);

    Simulator sim(config, std::move(scenario), exec);
    if (cmd.reward_log_path) {
      sim.set_reward_sink([&log](std::uint64_t step, std::span<const PromptRewards> batch) {
        for (const auto& rec : log_records_from_batch(step, batch)) {
          log << to_json_line(rec) << '\n';
        }
      });
    }
    for (std::int64_t t = 0; t < cmd.steps; ++t) {
      traj << to_json_line(sim.training_step()) << '\n';
    }
    if (cmd.checkpoint_path) {
      auto bytes = save_state(sim.state());
      std::ofstream ckpt = open_out(*cmd.checkpoint_path);
      ckpt.write(reinterpret_cast<const char*>(bytes.data()),
                 static_cast<std::streamsize>(bytes.size()));
    }
    traj.flush();
    log.flush();
    if (!traj || (cmd.reward_log_path && !log)) {
      throw Error(ErrorCode::kIo, "write failed");
    }
    out << "wrote " << cmd.steps << " records to " << cmd.out_path << '\n';
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

int cmd_replay(const ReplayCommand& cmd, std::ostream& out, std::ostream& err) {
  try {
    SchedulerConfig config = load_config(cmd.common);
    Scenario scenario = resolve_scenario(config);
    std::ifstream in = open_in(cmd.log_path);
    auto records = read_reward_log(in);

    const std::size_t g = records.front().group_rewards.size();
    const std::size_t n = records.front().group_rewards.front().size();
    if (n != scenario.n_rewards) {
      throw Error(ErrorCode::kInvalidConfig,
                  "log has " + std::to_string(n) + " reward dimensions, config expects " +
                      std::to_string(scenario.n_rewards));
    }
    if (g != config.group_size) {
      throw Error(ErrorCode::kInvalidConfig,
                  "log group size " + std::to_string(g) + " differs from group_size " +
                      std::to_string(config.group_size));
    }
    for (const auto& r : records) {
      if (r.category_id >= scenario.n_categories) {
        throw Error(ErrorCode::kInvalidConfig,
                    "log category " + std::to_string(r.category_id) + " outside " +
                        std::to_string(scenario.n_categories) + " categories");
      }
    }

    auto batches = batches_from_log(records);
    auto trajectory = replay(config, scenario.n_rewards, scenario.n_categories, batches);
    std::ofstream traj = open_out(cmd.out_path);
    write_trajectory(traj, trajectory);
    traj.flush();
    if (!traj) throw Error(ErrorCode::kIo, "write failed");
    out << "replayed " << trajectory.size() << " steps to " << cmd.out_path << '\n';
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

OracleCheckResult run_oracle_check(std::int64_t trials, std::uint64_t seed) {
  Rng rng(seed);
  OracleCheckResult result;
  result.trials = trials;
  for (std::int64_t t = 0; t < trials; ++t) {
    const std::size_t n = (t % 2 == 0) ? 2 : 3;
    std::vector<double> w(n);
    double total = 0.0;
    for (auto& v : w) {
      v = 0.05 + rng.uniform();
      total += v;
    }
    for (auto& v : w) v /= total;
    auto weights = SimplexWeights::from_values(std::move(w));
    GainVector q;
    q.q.resize(n, 0.0);
    if (t > 0) {
      for (auto& v : q.q) v = 2.0 * rng.uniform() - 1.0;
    }
    const double eta = std::exp(std::log(0.1) + rng.uniform() * std::log(100.0));
    const int resolution = n == 2 ? 2000 : 300;
    auto closed = update_reward_weights(weights, q, eta);
    auto oracle = mirror_descent_oracle(weights, q, eta, resolution);
    double gap = 0.0;
    for (std::size_t i = 0; i < n; ++i) gap = std::max(gap, std::abs(closed[i] - oracle[i]));
    if (t == 0) result.zero_gain_gap = gap;
    result.max_gap = std::max(result.max_gap, gap);
  }
  return result;
}

int cmd_oracle_check(const OracleCheckCommand& cmd, std::ostream& out, std::ostream& err) {
  if (cmd.trials < 1) {
    err << "error: trials must be >= 1\n";
    return kExitConfig;
  }
  OracleCheckResult r = run_oracle_check(cmd.trials, cmd.seed);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6e", r.max_gap);
  out << "trials " << r.trials << " max_linf_gap " << buf
      << (r.max_gap < 1e-6 ? " PASS" : " FAIL") << '\n';
  return r.max_gap < 1e-6 ? kExitOk : kExitCheckFailed;
}

int cmd_export_csv(const ExportCsvCommand& cmd, std::ostream& out, std::ostream& err) {
  try {
    std::ifstream in = open_in(cmd.in_path);
    auto records = read_trajectory(in);
    if (records.empty()) throw Error(ErrorCode::kDataFormat, "empty trajectory");
    std::ofstream csv = open_out(cmd.out_path);
    write_trajectory_csv(csv, records);
    csv.flush();
    if (!csv) throw Error(ErrorCode::kIo, "write failed");
    out << "exported " << records.size() << " rows to " << cmd.out_path << '\n';
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Self-paced multi-objective curriculum scheduler"};
  app.require_subcommand(1);

  auto add_common = [](CLI::App* sub, CommonOptions& c) {
    sub->add_option("--config", c.config_path, "Config file (TOML-style)");
    sub->add_option("--seed", c.seed, "Override the config seed");
    sub->add_option("--scenario", c.scenario, "symmetric | heterogeneous | staged");
    sub->add_flag("--freeze-scheduler", c.freeze_scheduler,
                  "Never adapt weights (uniform baseline)");
    sub->add_flag("--sample-by-weight", c.sample_by_weight,
                  "Draw prompt categories in proportion to the data weights");
  };

  RunCommand run_cmd;
  auto* run = app.add_subcommand("run", "Simulate the training loop");
  add_common(run, run_cmd.common);
  run->add_option("--steps", run_cmd.steps, "Number of training steps")->required();
  run->add_option("--out", run_cmd.out_path, "Trajectory output (JSONL)")->required();
  run->add_option("--log", run_cmd.reward_log_path, "Also write the judged rewards (JSONL)");
  run->add_option("--checkpoint", run_cmd.checkpoint_path, "Write the final scheduler state");

  ReplayCommand replay_cmd;
  auto* rep = app.add_subcommand("replay", "Run the scheduler over a reward log");
  add_common(rep, replay_cmd.common);
  rep->add_option("--log", replay_cmd.log_path, "Reward log (JSONL)")->required();
  rep->add_option("--out", replay_cmd.out_path, "Trajectory output (JSONL)")->required();

  OracleCheckCommand oracle_cmd;
  auto* oracle = app.add_subcommand("oracle-check",
                                    "Compare the closed-form weight update with a brute-force solver");
  oracle->add_option("--trials", oracle_cmd.trials, "Random instances");
  oracle->add_option("--seed", oracle_cmd.seed, "Instance generator seed");

  ExportCsvCommand csv_cmd;
  auto* csv = app.add_subcommand("export-csv", "Flatten a trajectory to CSV");
  csv->add_option("--in", csv_cmd.in_path, "Trajectory (JSONL)")->required();
  csv->add_option("--out", csv_cmd.out_path, "CSV output")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  if (run->parsed()) return cmd_run(run_cmd, out, err);
  if (rep->parsed()) return cmd_replay(replay_cmd, out, err);
  if (oracle->parsed()) return cmd_oracle_check(oracle_cmd, out, err);
  return cmd_export_csv(csv_cmd, out, err);
}

}  // namespace spard
