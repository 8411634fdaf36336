#include "spard/simenv.hpp"

#include <cmath>

namespace spard {
namespace {

// Stream coordinate reserved for per-step batch composition; prompt b of a
// step uses coordinate b + 1.
constexpr std::uint64_t kBatchStream = 0;

}  // namespace

CurriculumScheduler::CurriculumScheduler(const SchedulerConfig& config,
                                         std::size_t n_rewards,
                                         std::size_t n_categories)
    : config_(config), state_(SchedulerState::initial(n_rewards, n_categories)) {
  check_config(config_);
  buffers_.reserve(n_categories);
  for (std::size_t j = 0; j < n_categories; ++j) {
    buffers_.emplace_back(j, config_.buffer_capacity);
  }
}

CurriculumScheduler::StepOutcome CurriculumScheduler::observe(
    std::span<const PromptRewards> batch, Execution execution) {
  const std::size_t n = state_.reward_weights.size();
  const std::size_t m = state_.data_weights.size();
  std::vector<RewardVector> flat;
  for (const auto& prompt : batch) {
    if (prompt.category_id >= m) {
      throw Error(ErrorCode::kShapeMismatch, "category id out of range");
    }
    for (const auto& r : prompt.rewards) {
      if (r.size() != n) {
        throw Error(ErrorCode::kShapeMismatch, "reward vector length mismatch");
      }
      flat.push_back(r);
    }
  }
  if (flat.empty()) throw Error(ErrorCode::kEmptyBatch, "observe: empty batch");

  StepOutcome outcome;
  outcome.batch_mean.assign(n, 0.0);
  outcome.batch_std.assign(n, 0.0);
  for (const auto& r : flat) {
    for (std::size_t i = 0; i < n; ++i) outcome.batch_mean[i] += r[i];
  }
  for (auto& v : outcome.batch_mean) v /= static_cast<double>(flat.size());
  for (const auto& r : flat) {
    for (std::size_t i = 0; i < n; ++i) {
      double d = r[i] - outcome.batch_mean[i];
      outcome.batch_std[i] += d * d;
    }
  }
  for (auto& v : outcome.batch_std) v = std::sqrt(v / static_cast<double>(flat.size()));

  state_.stats = ema_update(state_.stats, flat, config_.alpha);
  for (const auto& prompt : batch) buffers_[prompt.category_id].push(prompt.rewards);
  ++state_.step;

  if (config_.frozen() || state_.step % config_.interval_k != 0) return outcome;

  if (state_.stats.has_snapshot) {
    GainVector gain = reliable_gain(state_.stats, config_.lcb_beta);
    state_.reward_weights = apply_weight_floor(
        update_reward_weights(state_.reward_weights, gain, config_.eta),
        config_.weight_floor);
    state_.attribution = compute_attribution(buffers_, state_.attribution, n,
                                             config_.temperature_mu, execution);
    for (auto& b : buffers_) b.mark_consumed();
    SimplexWeights u =
        target_importance(state_.reward_weights, state_.attribution->normalized);
    state_.data_weights = update_data_weights(state_.data_weights, u, config_.alpha);
    outcome.updated = true;
    outcome.gain = std::move(gain);
    outcome.stale_columns = state_.attribution->stale_columns;
  }
  state_.stats = take_snapshot(std::move(state_.stats));
  return outcome;
}

Simulator::Simulator(SchedulerConfig config, Scenario scenario,
                     ExecutionOptions exec)
    : config_(std::move(config)),
      scenario_(std::move(scenario)),
      exec_(exec),
      scheduler_(config_, scenario_.n_rewards, scenario_.n_categories),
      policy_(scenario_.initial_logits, scenario_.seq_len),
      ref_policy_(policy_) {
  scenario_.judge.validate(scenario_.vocab_size, scenario_.n_categories);
}

std::vector<std::size_t> Simulator::draw_categories(std::uint64_t step) {
  Rng rng = Rng::stream(config_.seed, step, kBatchStream);
  std::span<const double> mix = config_.sample_by_weight
                                    ? state().data_weights.values()
                                    : std::span<const double>(scenario_.category_mix);
  std::vector<std::size_t> categories(config_.batch_size);
  for (auto& c : categories) c = rng.categorical(mix);
  return categories;
}

TrajectoryRecord Simulator::training_step() {
  const std::uint64_t step = state().step + 1;
  const auto categories = draw_categories(step);
  const auto batch = static_cast<std::ptrdiff_t>(categories.size());

  std::vector<GroupRollout> rollouts(categories.size());
  auto sample_and_judge = [&](std::ptrdiff_t b) {
    Rng rng = Rng::stream(config_.seed, step, static_cast<std::uint64_t>(b) + 1);
    rollouts[b] = sample_group(policy_, categories[b], config_.group_size, rng);
    rollouts[b].rewards = judge(rollouts[b], scenario_.judge, rng);
  };
  if (exec_.execution == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t b = 0; b < batch; ++b) sample_and_judge(b);
  } else {
    for (std::ptrdiff_t b = 0; b < batch; ++b) sample_and_judge(b);
  }

  std::vector<PromptRewards> judged(rollouts.size());
  for (std::size_t b = 0; b < rollouts.size(); ++b) {
    judged[b] = {rollouts[b].category_id, rollouts[b].rewards};
  }
  if (sink_) sink_(step, judged);

  auto outcome = scheduler_.observe(judged, exec_.execution);
  const SchedulerState& s = scheduler_.state();

  for (auto& r : rollouts) score_rollout(r, s.reward_weights);

  SimplexWeights loss_weights = s.data_weights;
  if (config_.sample_by_weight) {
    // Categories were already drawn by weight; weighting the loss again
    // would count w_d twice, so every prompt counts equally.
    std::vector<double> share(scenario_.n_categories, 0.0);
    for (auto c : categories) share[c] += 1.0 / static_cast<double>(categories.size());
    double total = 0.0;
    for (double v : share) total += v;
    for (auto& v : share) v /= total;
    loss_weights = SimplexWeights::from_values(std::move(share));
  }
  GrpoOptions grpo{config_.clip_eps, config_.kl_coef, config_.kl_mode};
  BatchLoss loss =
      batch_grpo_loss(rollouts, policy_, ref_policy_, grpo, loss_weights, exec_);
  policy_ = apply_gradient(policy_, loss.gradient, config_.policy_lr);

  TrajectoryRecord rec;
  rec.step = step;
  rec.reward_weights.assign(s.reward_weights.values().begin(), s.reward_weights.values().end());
  rec.data_weights.assign(s.data_weights.values().begin(), s.data_weights.values().end());
  rec.mean_reward_per_dim = std::move(outcome.batch_mean);
  rec.std_reward_per_dim = std::move(outcome.batch_std);
  double scalar_sum = 0.0;
  std::size_t scalar_count = 0;
  for (const auto& r : rollouts) {
    for (double v : r.scalar_rewards) {
      scalar_sum += v;
      ++scalar_count;
    }
  }
  rec.scalar_reward_mean = scalar_sum / static_cast<double>(scalar_count);
  rec.loss_report = std::move(loss.report);
  if (outcome.gain) rec.gain_vector = std::move(outcome.gain->q);
  rec.stale_columns = std::move(outcome.stale_columns);
  return rec;
}

std::vector<TrajectoryRecord> run(const SchedulerConfig& config,
                                  std::uint64_t total_steps,
                                  const ExecutionOptions& exec, RewardSink sink) {
  if (total_steps < 1) {
    throw Error(ErrorCode::kInvalidConfig, "steps must be >= 1");
  }
  Simulator sim(config, resolve_scenario(config), exec);
  if (sink) sim.set_reward_sink(std::move(sink));
  std::vector<TrajectoryRecord> out;
  out.reserve(total_steps);
  for (std::uint64_t t = 0; t < total_steps; ++t) out.push_back(sim.training_step());
  return out;
}

std::vector<TrajectoryRecord> replay(
    const SchedulerConfig& config, std::size_t n_rewards,
    std::size_t n_categories,
    std::span<const std::vector<PromptRewards>> batches) {
  CurriculumScheduler scheduler(config, n_rewards, n_categories);
  std::vector<TrajectoryRecord> out;
  out.reserve(batches.size());
  for (const auto& batch : batches) {
    auto outcome = scheduler.observe(batch);
    const SchedulerState& s = scheduler.state();
    TrajectoryRecord rec;
    rec.step = s.step;
    rec.reward_weights.assign(s.reward_weights.values().begin(), s.reward_weights.values().end());
    rec.data_weights.assign(s.data_weights.values().begin(), s.data_weights.values().end());
    rec.mean_reward_per_dim = std::move(outcome.batch_mean);
    rec.std_reward_per_dim = std::move(outcome.batch_std);
    double scalar_sum = 0.0;
    std::size_t scalar_count = 0;
    for (const auto& prompt : batch) {
      for (const auto& r : prompt.rewards) {
        scalar_sum += scalarize(r, s.reward_weights);
        ++scalar_count;
      }
    }
    rec.scalar_reward_mean = scalar_sum / static_cast<double>(scalar_count);
    if (outcome.gain) rec.gain_vector = std::move(outcome.gain->q);
    rec.stale_columns = std::move(outcome.stale_columns);
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace spard
