// Desk-scale policy and judges.
//
// The policy is an order-0 (unigram) token model with one logit row per
// prompt category: a response of category c is seq_len i.i.d. draws from
// softmax(logits[c]). Judges score a response on each criterion from the
// fraction of its tokens that fall in that criterion's token set.

#ifndef SPARD_TOYPOLICY_HPP_
#define SPARD_TOYPOLICY_HPP_

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "spard/core.hpp"

namespace spard {

// Seeded generator; independent streams are derived from a master seed and
// up to two stream coordinates (e.g. step and prompt index).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double normal(double stddev) { return std::normal_distribution<double>(0.0, stddev)(engine_); }
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  // Draws from an unnormalized discrete distribution.
  std::size_t categorical(std::span<const double> probs);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

class ToyPolicy {
 public:
  ToyPolicy(Matrix logits, std::size_t seq_len);

  static ToyPolicy uniform(std::size_t n_categories, std::size_t vocab_size,
                           std::size_t seq_len);

  const Matrix& logits() const { return logits_; }
  std::size_t n_categories() const { return logits_.rows; }
  std::size_t vocab_size() const { return logits_.cols; }
  std::size_t seq_len() const { return seq_len_; }

  std::vector<double> log_probs(std::size_t category) const;
  std::vector<double> probs(std::size_t category) const;

  bool operator==(const ToyPolicy&) const = default;

 private:
  Matrix logits_;
  std::size_t seq_len_;
};

// One prompt's sampled group. Tokens and old log-probabilities are stored
// row-major as G x seq_len.
struct GroupRollout {
  std::size_t category_id = 0;
  std::size_t group_size = 0;
  std::size_t seq_len = 0;
  std::vector<int> tokens;
  std::vector<double> old_logprobs;
  std::vector<RewardVector> rewards;
  std::vector<double> scalar_rewards;
  std::vector<double> advantages;

  std::span<const int> response(std::size_t i) const {
    return {tokens.data() + i * seq_len, seq_len};
  }
};

struct SyntheticJudge {
  // token_sets[i]: vocabulary ids that count toward criterion i.
  std::vector<std::vector<int>> token_sets;
  // noise_scale(i, c): stddev of the gaussian added to criterion i's score
  // for responses of category c.
  Matrix noise_scale;
  // Score is fraction^(1 / difficulty[i]).
  std::vector<double> difficulty;

  std::size_t n_rewards() const { return token_sets.size(); }
  // Throws kInvalidConfig on empty token sets, negative noise, difficulty
  // below 1 or inconsistent shapes.
  void validate(std::size_t vocab_size, std::size_t n_categories) const;
};

// Noise-free score of one response on criterion `dimension`.
double base_score(std::span<const int> response, std::span<const int> token_set,
                  double difficulty);

GroupRollout sample_group(const ToyPolicy& policy, std::size_t category_id,
                          std::size_t group_size, Rng& rng);

std::vector<RewardVector> judge(const GroupRollout& rollout,
                                const SyntheticJudge& judge, Rng& rng);

// logits - lr * gradient. Throws kShapeMismatch on mismatched shapes.
ToyPolicy apply_gradient(const ToyPolicy& policy, const Matrix& gradient,
                         double lr);

}  // namespace spard

#endif  // SPARD_TOYPOLICY_HPP_
