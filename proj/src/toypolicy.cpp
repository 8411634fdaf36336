#include "spard/toypolicy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace spard {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng Rng::stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return Rng(splitmix64(splitmix64(splitmix64(seed) ^ a) ^ (b + 0x632be59bd9b4e019ULL)));
}

std::size_t Rng::categorical(std::span<const double> probs) {
  double total = 0.0;
  for (double p : probs) total += p;
  double u = uniform() * total;
  double acc = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    acc += probs[k];
    if (u < acc) return k;
  }
  // u landed on the rounding slack; return the last nonzero entry.
  for (std::size_t k = probs.size(); k-- > 0;) {
    if (probs[k] > 0.0) return k;
  }
  return probs.size() - 1;
}

ToyPolicy::ToyPolicy(Matrix logits, std::size_t seq_len)
    : logits_(std::move(logits)), seq_len_(seq_len) {
  if (logits_.rows == 0 || logits_.cols == 0 || seq_len_ == 0) {
    throw Error(ErrorCode::kInvalidDimension, "policy shape must be non-empty");
  }
  for (double v : logits_.data) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidConfig, "policy logits must be finite");
    }
  }
}

ToyPolicy ToyPolicy::uniform(std::size_t n_categories, std::size_t vocab_size,
                             std::size_t seq_len) {
  return ToyPolicy(Matrix(n_categories, vocab_size, 0.0), seq_len);
}

std::vector<double> ToyPolicy::log_probs(std::size_t category) const {
  auto row = logits_.row(category);
  double max_logit = *std::max_element(row.begin(), row.end());
  double total = 0.0;
  for (double v : row) total += std::exp(v - max_logit);
  double log_z = max_logit + std::log(total);
  std::vector<double> out(row.size());
  for (std::size_t k = 0; k < row.size(); ++k) out[k] = row[k] - log_z;
  return out;
}

std::vector<double> ToyPolicy::probs(std::size_t category) const {
  auto out = log_probs(category);
  for (auto& v : out) v = std::exp(v);
  return out;
}

void SyntheticJudge::validate(std::size_t vocab_size,
                              std::size_t n_categories) const {
  const std::size_t n = token_sets.size();
  if (n == 0) throw Error(ErrorCode::kInvalidConfig, "judge has no criteria");
  for (const auto& set : token_sets) {
    if (set.empty()) {
      throw Error(ErrorCode::kInvalidConfig, "judge token_sets must be non-empty");
    }
    for (int t : set) {
      if (t < 0 || static_cast<std::size_t>(t) >= vocab_size) {
        throw Error(ErrorCode::kInvalidConfig, "judge token id outside vocabulary");
      }
    }
  }
  if (noise_scale.rows != n || noise_scale.cols != n_categories) {
    throw Error(ErrorCode::kInvalidConfig,
                "judge noise_scale must be n_rewards x n_categories");
  }
  for (double s : noise_scale.data) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw Error(ErrorCode::kInvalidConfig, "judge noise_scale must be >= 0");
    }
  }
  if (difficulty.size() != n) {
    throw Error(ErrorCode::kInvalidConfig, "judge difficulty must have n_rewards entries");
  }
  for (double d : difficulty) {
    if (!(d >= 1.0) || !std::isfinite(d)) {
      throw Error(ErrorCode::kInvalidConfig, "judge difficulty must be >= 1");
    }
  }
}

double base_score(std::span<const int> response, std::span<const int> token_set,
                  double difficulty) {
  if (response.empty()) return 0.0;
  std::size_t hits = 0;
  for (int t : response) {
    if (std::find(token_set.begin(), token_set.end(), t) != token_set.end()) ++hits;
  }
  double fraction = static_cast<double>(hits) / static_cast<double>(response.size());
  return difficulty == 1.0 ? fraction : std::pow(fraction, 1.0 / difficulty);
}

GroupRollout sample_group(const ToyPolicy& policy, std::size_t category_id,
                          std::size_t group_size, Rng& rng) {
  if (group_size < 2) {
    throw Error(ErrorCode::kGroupTooSmall, "group size must be >= 2");
  }
  if (category_id >= policy.n_categories()) {
    throw Error(ErrorCode::kShapeMismatch, "category id outside the policy");
  }
  const auto log_p = policy.log_probs(category_id);
  std::vector<double> p(log_p.size());
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::exp(log_p[k]);

  GroupRollout out;
  out.category_id = category_id;
  out.group_size = group_size;
  out.seq_len = policy.seq_len();
  out.tokens.resize(group_size * policy.seq_len());
  out.old_logprobs.resize(out.tokens.size());
  for (std::size_t t = 0; t < out.tokens.size(); ++t) {
    std::size_t tok = rng.categorical(p);
    out.tokens[t] = static_cast<int>(tok);
    out.old_logprobs[t] = log_p[tok];
  }
  return out;
}

std::vector<RewardVector> judge(const GroupRollout& rollout,
                                const SyntheticJudge& judge, Rng& rng) {
  const std::size_t n = judge.n_rewards();
  std::vector<RewardVector> out;
  out.reserve(rollout.group_size);
  for (std::size_t g = 0; g < rollout.group_size; ++g) {
    auto response = rollout.response(g);
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = base_score(response, judge.token_sets[i], judge.difficulty[i]);
      double noise = judge.noise_scale(i, rollout.category_id);
      if (noise > 0.0) s += rng.normal(noise);
      scores[i] = std::clamp(s, 0.0, 1.0);
    }
    out.emplace_back(std::move(scores));
  }
  return out;
}

ToyPolicy apply_gradient(const ToyPolicy& policy, const Matrix& gradient,
                         double lr) {
  const Matrix& logits = policy.logits();
  if (gradient.rows != logits.rows || gradient.cols != logits.cols) {
    throw Error(ErrorCode::kShapeMismatch,
                "gradient shape " + std::to_string(gradient.rows) + "x" +
                    std::to_string(gradient.cols) + " does not match policy");
  }
  Matrix next = logits;
  for (std::size_t k = 0; k < next.data.size(); ++k) {
    next.data[k] -= lr * gradient.data[k];
  }
  return ToyPolicy(std::move(next), policy.seq_len());
}

}  // namespace spard
