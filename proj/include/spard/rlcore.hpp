// Reward scalarization, group-relative advantages and the clipped GRPO
// surrogate (negated, so that it is minimized) for the toy policy.

#ifndef SPARD_RLCORE_HPP_
#define SPARD_RLCORE_HPP_

#include <span>
#include <vector>

#include "spard/config.hpp"
#include "spard/core.hpp"
#include "spard/parallel.hpp"
#include "spard/toypolicy.hpp"

namespace spard {

// Groups whose reward std falls below this get all-zero advantages.
inline constexpr double kDegenerateGroupStd = 1e-8;

double scalarize(const RewardVector& rewards, const SimplexWeights& w_r);

// (r - mean) / population std; all zeros for a degenerate group.
// Throws kGroupTooSmall for fewer than two rewards.
std::vector<double> group_advantages(std::span<const double> scalar_rewards);

// Fills rollout.scalar_rewards and rollout.advantages.
void score_rollout(GroupRollout& rollout, const SimplexWeights& w_r);

struct GrpoOptions {
  double clip_eps = 0.2;
  double kl_coef = 0.04;
  KlMode kl_mode = KlMode::kEstimator;
};

struct GrpoResult {
  double loss = 0.0;
  Matrix gradient;             // d loss / d logits, policy-shaped
  double clip_fraction = 0.0;  // share of tokens where the clip was active
  double kl_penalty = 0.0;     // mean per-token KL estimate (>= 0)
};

// Negated clipped surrogate with KL penalty for one group, averaged over
// tokens within each response and over the G responses. Throws
// kStaleRollout if old log-probabilities or advantages are missing.
GrpoResult grpo_loss(const GroupRollout& rollout, const ToyPolicy& policy,
                     const ToyPolicy& ref_policy, const GrpoOptions& options);

struct LossReport {
  double total = 0.0;
  std::vector<double> per_category;
  double clip_fraction = 0.0;
  double kl_penalty = 0.0;
};

// total = sum_j w_d[j] * per_category_losses[j] over categories with a
// nonzero count. Absent categories contribute nothing and their weight is
// not redistributed. Throws kEmptyBatch if every count is zero.
LossReport weighted_loss(std::span<const double> per_category_losses,
                         std::span<const std::size_t> counts,
                         const SimplexWeights& w_d);

struct BatchLoss {
  LossReport report;
  Matrix gradient;
  std::vector<std::size_t> counts;
};

// Per-category mean GRPO loss over the batch, combined with
// `category_weights`; the gradient is that of report.total.
BatchLoss batch_grpo_loss(std::span<const GroupRollout> rollouts,
                          const ToyPolicy& policy, const ToyPolicy& ref_policy,
                          const GrpoOptions& options,
                          const SimplexWeights& category_weights,
                          const ExecutionOptions& exec = {});

}  // namespace spard

#endif  // SPARD_RLCORE_HPP_
