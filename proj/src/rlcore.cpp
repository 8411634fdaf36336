#include "spard/rlcore.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>

namespace spard {

ReductionOrder reduction_order_from_env() {
  const char* v = std::getenv("SPARD_DETERMINISTIC");
  return (v != nullptr && std::strcmp(v, "1") == 0) ? ReductionOrder::kFixed
                                                     : ReductionOrder::kUnordered;
}

double scalarize(const RewardVector& rewards, const SimplexWeights& w_r) {
  if (rewards.size() != w_r.size()) {
    throw Error(ErrorCode::kShapeMismatch, "scalarize: length mismatch");
  }
  double s = 0.0;
  for (std::size_t k = 0; k < rewards.size(); ++k) s += w_r[k] * rewards[k];
  return s;
}

std::vector<double> group_advantages(std::span<const double> scalar_rewards) {
  const std::size_t g = scalar_rewards.size();
  if (g < 2) throw Error(ErrorCode::kGroupTooSmall, "group size must be >= 2");
  double mean = 0.0;
  for (double r : scalar_rewards) mean += r;
  mean /= static_cast<double>(g);
  double var = 0.0;
  for (double r : scalar_rewards) var += (r - mean) * (r - mean);
  double sd = std::sqrt(var / static_cast<double>(g));
  std::vector<double> out(g, 0.0);
  if (sd < kDegenerateGroupStd) return out;
  for (std::size_t i = 0; i < g; ++i) out[i] = (scalar_rewards[i] - mean) / sd;
  return out;
}

void score_rollout(GroupRollout& rollout, const SimplexWeights& w_r) {
  rollout.scalar_rewards.resize(rollout.rewards.size());
  for (std::size_t i = 0; i < rollout.rewards.size(); ++i) {
    rollout.scalar_rewards[i] = scalarize(rollout.rewards[i], w_r);
  }
  rollout.advantages = group_advantages(rollout.scalar_rewards);
}

namespace {

struct RowResult {
  double loss = 0.0;
  std::vector<double> grad;  // gradient of the rollout's category row
  std::size_t clipped = 0;
  std::size_t tokens = 0;
  double kl_sum = 0.0;
};

double exact_kl(std::span<const double> log_p, std::span<const double> log_q) {
  double kl = 0.0;
  for (std::size_t k = 0; k < log_p.size(); ++k) {
    kl += std::exp(log_p[k]) * (log_p[k] - log_q[k]);
  }
  return std::max(0.0, kl);
}

void check_rollout(const GroupRollout& rollout, const ToyPolicy& policy,
                   const ToyPolicy& ref_policy) {
  const std::size_t c = rollout.category_id;
  const std::size_t g = rollout.group_size;
  const std::size_t len = rollout.seq_len;
  if (rollout.old_logprobs.size() != rollout.tokens.size() ||
      rollout.tokens.size() != g * len) {
    throw Error(ErrorCode::kStaleRollout, "rollout has no old log-probabilities");
  }
  if (rollout.advantages.size() != g) {
    throw Error(ErrorCode::kStaleRollout, "rollout advantages not computed");
  }
  if (c >= policy.n_categories() || ref_policy.logits().rows != policy.logits().rows ||
      ref_policy.logits().cols != policy.logits().cols) {
    throw Error(ErrorCode::kShapeMismatch, "grpo_loss: policy shape mismatch");
  }
}

RowResult grpo_row(const GroupRollout& rollout, const ToyPolicy& policy,
                   const ToyPolicy& ref_policy, const GrpoOptions& options) {
  check_rollout(rollout, policy, ref_policy);
  const std::size_t c = rollout.category_id;
  const std::size_t g = rollout.group_size;
  const std::size_t len = rollout.seq_len;

  const auto log_p = policy.log_probs(c);
  const auto log_ref = ref_policy.log_probs(c);
  const std::size_t v = log_p.size();
  const double lo = 1.0 - options.clip_eps;
  const double hi = 1.0 + options.clip_eps;
  const double scale = 1.0 / (static_cast<double>(g) * static_cast<double>(len));
  const bool estimator = options.kl_mode == KlMode::kEstimator;

  RowResult out;
  out.grad.assign(v, 0.0);
  out.tokens = g * len;
  // d objective / d new_logprob, accumulated per token id.
  std::vector<double> coef(v, 0.0);
  double coef_total = 0.0;
  double objective = 0.0;
  for (std::size_t i = 0; i < g; ++i) {
    const double adv = rollout.advantages[i];
    for (std::size_t t = 0; t < len; ++t) {
      const std::size_t idx = i * len + t;
      const auto tok = static_cast<std::size_t>(rollout.tokens[idx]);
      const double new_lp = log_p[tok];
      const double ratio = std::exp(new_lp - rollout.old_logprobs[idx]);
      const double unclipped = ratio * adv;
      const double clipped = std::clamp(ratio, lo, hi) * adv;
      double term;
      double d_term;
      if (unclipped <= clipped) {
        term = unclipped;
        d_term = unclipped;
      } else {
        term = clipped;
        d_term = 0.0;
        ++out.clipped;
      }
      double d_total = d_term;
      if (estimator) {
        const double diff = log_ref[tok] - new_lp;
        const double k3 = std::exp(diff) - diff - 1.0;
        out.kl_sum += k3;
        term -= options.kl_coef * k3;
        d_total -= options.kl_coef * (1.0 - std::exp(diff));
      }
      objective += term;
      coef[tok] += d_total;
      coef_total += d_total;
    }
  }
  // new_logprob(tok) = z_tok - logsumexp(z)  =>  d/dz_k = [k == tok] - p_k.
  for (std::size_t k = 0; k < v; ++k) {
    out.grad[k] = -scale * (coef[k] - std::exp(log_p[k]) * coef_total);
  }
  out.loss = -scale * objective;

  if (!estimator) {
    // The exact KL is the same for every token, so its token average is the
    // row KL itself.
    const double kl = exact_kl(log_p, log_ref);
    out.kl_sum = kl * static_cast<double>(out.tokens);
    out.loss += options.kl_coef * kl;
    for (std::size_t k = 0; k < v; ++k) {
      const double p = std::exp(log_p[k]);
      out.grad[k] += options.kl_coef * p * ((log_p[k] - log_ref[k]) - kl);
    }
  }
  return out;
}

}  // namespace

GrpoResult grpo_loss(const GroupRollout& rollout, const ToyPolicy& policy,
                     const ToyPolicy& ref_policy, const GrpoOptions& options) {
  RowResult row = grpo_row(rollout, policy, ref_policy, options);
  GrpoResult out;
  out.loss = row.loss;
  out.gradient = Matrix(policy.n_categories(), policy.vocab_size());
  std::copy(row.grad.begin(), row.grad.end(),
            out.gradient.row(rollout.category_id).begin());
  out.clip_fraction =
      static_cast<double>(row.clipped) / static_cast<double>(row.tokens);
  out.kl_penalty = row.kl_sum / static_cast<double>(row.tokens);
  return out;
}

LossReport weighted_loss(std::span<const double> per_category_losses,
                         std::span<const std::size_t> counts,
                         const SimplexWeights& w_d) {
  if (per_category_losses.size() != w_d.size() || counts.size() != w_d.size()) {
    throw Error(ErrorCode::kShapeMismatch, "weighted_loss: length mismatch");
  }
  LossReport report;
  report.per_category.assign(per_category_losses.begin(), per_category_losses.end());
  bool any = false;
  for (std::size_t j = 0; j < w_d.size(); ++j) {
    if (counts[j] == 0) continue;
    any = true;
    report.total += w_d[j] * per_category_losses[j];
  }
  if (!any) throw Error(ErrorCode::kEmptyBatch, "weighted_loss: empty batch");
  return report;
}

namespace {

// Per-category sums of loss and row gradient plus token statistics.
struct CategorySums {
  std::vector<double> loss;
  Matrix grad;
  std::vector<std::size_t> counts;
  std::size_t clipped = 0;
  std::size_t tokens = 0;
  double kl_sum = 0.0;

  CategorySums(std::size_t m, std::size_t v) : loss(m, 0.0), grad(m, v), counts(m, 0) {}

  void add(std::size_t c, const RowResult& r) {
    loss[c] += r.loss;
    auto row = grad.row(c);
    for (std::size_t k = 0; k < row.size(); ++k) row[k] += r.grad[k];
    ++counts[c];
    clipped += r.clipped;
    tokens += r.tokens;
    kl_sum += r.kl_sum;
  }

  void merge(const CategorySums& o) {
    for (std::size_t c = 0; c < loss.size(); ++c) {
      loss[c] += o.loss[c];
      counts[c] += o.counts[c];
    }
    for (std::size_t k = 0; k < grad.data.size(); ++k) grad.data[k] += o.grad.data[k];
    clipped += o.clipped;
    tokens += o.tokens;
    kl_sum += o.kl_sum;
  }
};

}  // namespace

BatchLoss batch_grpo_loss(std::span<const GroupRollout> rollouts,
                          const ToyPolicy& policy, const ToyPolicy& ref_policy,
                          const GrpoOptions& options,
                          const SimplexWeights& category_weights,
                          const ExecutionOptions& exec) {
  const std::size_t m = policy.n_categories();
  const std::size_t v = policy.vocab_size();
  if (category_weights.size() != m) {
    throw Error(ErrorCode::kShapeMismatch, "batch_grpo_loss: weight length mismatch");
  }
  if (rollouts.empty()) throw Error(ErrorCode::kEmptyBatch, "batch_grpo_loss: empty batch");
  for (const auto& r : rollouts) check_rollout(r, policy, ref_policy);
  const auto n = static_cast<std::ptrdiff_t>(rollouts.size());

  CategorySums sums(m, v);
  if (exec.execution == Execution::kSerial) {
    for (std::ptrdiff_t b = 0; b < n; ++b) {
      sums.add(rollouts[b].category_id, grpo_row(rollouts[b], policy, ref_policy, options));
    }
  } else if (exec.reduction == ReductionOrder::kFixed) {
    std::vector<RowResult> rows(rollouts.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t b = 0; b < n; ++b) {
      rows[b] = grpo_row(rollouts[b], policy, ref_policy, options);
    }
    for (std::ptrdiff_t b = 0; b < n; ++b) sums.add(rollouts[b].category_id, rows[b]);
  } else {
#pragma omp parallel
    {
      CategorySums local(m, v);
#pragma omp for schedule(dynamic) nowait
      for (std::ptrdiff_t b = 0; b < n; ++b) {
        local.add(rollouts[b].category_id, grpo_row(rollouts[b], policy, ref_policy, options));
      }
#pragma omp critical(spard_batch_reduce)
      sums.merge(local);
    }
  }

  BatchLoss out;
  out.counts = sums.counts;
  std::vector<double> means(m, 0.0);
  for (std::size_t c = 0; c < m; ++c) {
    if (sums.counts[c] > 0) means[c] = sums.loss[c] / static_cast<double>(sums.counts[c]);
  }
  out.report = weighted_loss(means, sums.counts, category_weights);
  out.report.clip_fraction =
      static_cast<double>(sums.clipped) / static_cast<double>(sums.tokens);
  out.report.kl_penalty = sums.kl_sum / static_cast<double>(sums.tokens);
  out.gradient = Matrix(m, v);
  for (std::size_t c = 0; c < m; ++c) {
    if (sums.counts[c] == 0) continue;
    const double w = category_weights[c] / static_cast<double>(sums.counts[c]);
    auto src = sums.grad.row(c);
    auto dst = out.gradient.row(c);
    for (std::size_t k = 0; k < v; ++k) dst[k] = w * src[k];
  }
  return out;
}

}  // namespace spard
