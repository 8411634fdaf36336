// The curriculum training loop: sample prompts and groups, judge them,
// update reward statistics every step, adapt reward and data weights every
// interval_k steps, then take one weighted GRPO step on the toy policy.

#ifndef SPARD_SIMENV_HPP_
#define SPARD_SIMENV_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spard/config.hpp"
#include "spard/core.hpp"
#include "spard/pawa.hpp"
#include "spard/parallel.hpp"
#include "spard/radr.hpp"
#include "spard/rlcore.hpp"
#include "spard/state.hpp"
#include "spard/toypolicy.hpp"

namespace spard {

struct Scenario {
  std::string name;
  std::size_t n_rewards = 0;
  std::size_t n_categories = 0;
  std::size_t vocab_size = 0;
  std::size_t seq_len = 0;
  SyntheticJudge judge;
  // Probability of each category when a prompt is drawn.
  std::vector<double> category_mix;
  Matrix initial_logits;  // n_categories x vocab_size
};

// Built-in scenarios: "symmetric", "heterogeneous", "staged".
// Throws kUnknownScenario otherwise.
Scenario build_scenario(std::string_view name);
std::vector<std::string> scenario_names();

// Applies the [scenario] overrides of a config and checks that the config
// and scenario agree on N and M.
Scenario resolve_scenario(const SchedulerConfig& config);

// One prompt's judged group, as seen by the scheduler.
struct PromptRewards {
  std::size_t category_id = 0;
  GroupRewards rewards;
};

struct TrajectoryRecord {
  std::uint64_t step = 0;
  std::vector<double> reward_weights;
  std::vector<double> data_weights;
  std::vector<double> mean_reward_per_dim;
  std::vector<double> std_reward_per_dim;
  double scalar_reward_mean = 0.0;
  // Absent for scheduler-only replays.
  std::optional<LossReport> loss_report;
  // Present only at weight-update steps.
  std::optional<std::vector<double>> gain_vector;
  std::vector<std::size_t> stale_columns;
};

// The scheduling half of the loop (statistics, reward weights, attribution,
// data weights). Shared by the simulator and by offline replay so that both
// produce identical weights from identical rewards.
class CurriculumScheduler {
 public:
  CurriculumScheduler(const SchedulerConfig& config, std::size_t n_rewards,
                      std::size_t n_categories);

  struct StepOutcome {
    bool updated = false;
    std::optional<GainVector> gain;
    std::vector<std::size_t> stale_columns;
    std::vector<double> batch_mean;
    std::vector<double> batch_std;
  };

  // Ingests one step's judged batch. Statistics move every step; the first
  // interval boundary only snapshots them, later boundaries update both
  // weight vectors and snapshot again.
  StepOutcome observe(std::span<const PromptRewards> batch,
                      Execution execution = Execution::kParallel);

  const SchedulerState& state() const { return state_; }
  const std::vector<CategoryBuffer>& buffers() const { return buffers_; }

 private:
  SchedulerConfig config_;
  SchedulerState state_;
  std::vector<CategoryBuffer> buffers_;
};

using RewardSink =
    std::function<void(std::uint64_t step, std::span<const PromptRewards>)>;

class Simulator {
 public:
  Simulator(SchedulerConfig config, Scenario scenario,
            ExecutionOptions exec = {});

  // Runs one full step of the loop and returns its record.
  TrajectoryRecord training_step();

  const SchedulerState& state() const { return scheduler_.state(); }
  const CurriculumScheduler& scheduler() const { return scheduler_; }
  const ToyPolicy& policy() const { return policy_; }
  const Scenario& scenario() const { return scenario_; }
  const SchedulerConfig& config() const { return config_; }

  void set_reward_sink(RewardSink sink) { sink_ = std::move(sink); }

 private:
  std::vector<std::size_t> draw_categories(std::uint64_t step);

  SchedulerConfig config_;
  Scenario scenario_;
  ExecutionOptions exec_;
  CurriculumScheduler scheduler_;
  ToyPolicy policy_;
  ToyPolicy ref_policy_;
  RewardSink sink_;
};

// Deterministic given config.seed (and, for thread counts above one,
// ReductionOrder::kFixed). Returns exactly total_steps records.
std::vector<TrajectoryRecord> run(const SchedulerConfig& config,
                                  std::uint64_t total_steps,
                                  const ExecutionOptions& exec = {},
                                  RewardSink sink = {});

// Feeds logged batches through the scheduler only; records carry no loss.
std::vector<TrajectoryRecord> replay(
    const SchedulerConfig& config, std::size_t n_rewards,
    std::size_t n_categories,
    std::span<const std::vector<PromptRewards>> batches);

}  // namespace spard

#endif  // SPARD_SIMENV_HPP_
