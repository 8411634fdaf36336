// Built-in synthetic scenarios.
//
// Vocabulary layout shared by all scenarios: criterion i owns a block of
// kSetSize consecutive token ids; the remaining ids are filler that no
// judge rewards (logit 0 everywhere). Category j's row starts with its own
// criterion's tokens at own_logit[j] and every other criterion's tokens at
// a common suppressed logit. Because a row is a single softmax, criteria
// compete for token mass inside each category.

#include <algorithm>
#include <string>

#include "spard/simenv.hpp"

namespace spard {
namespace {

constexpr std::size_t kVocab = 16;
constexpr std::size_t kSeqLen = 8;
constexpr std::size_t kSetSize = 3;

std::vector<int> token_block(std::size_t first, std::size_t count) {
  std::vector<int> out(count);
  for (std::size_t k = 0; k < count; ++k) out[k] = static_cast<int>(first + k);
  return out;
}

Scenario base(std::string name, std::size_t n, std::size_t m) {
  Scenario s;
  s.name = std::move(name);
  s.n_rewards = n;
  s.n_categories = m;
  s.vocab_size = kVocab;
  s.seq_len = kSeqLen;
  for (std::size_t i = 0; i < n; ++i) {
    s.judge.token_sets.push_back(token_block(i * kSetSize, kSetSize));
  }
  s.judge.noise_scale = Matrix(n, m, 0.0);
  s.judge.difficulty.assign(n, 1.0);
  s.category_mix.assign(m, 1.0 / static_cast<double>(m));
  s.initial_logits = Matrix(m, kVocab, 0.0);
  return s;
}

// Requires n == m.
void make_diagonal(Scenario& s, const std::vector<double>& own_logit, double suppressed,
                   const std::vector<double>& own_noise, double cross_noise) {
  for (std::size_t j = 0; j < s.n_categories; ++j) {
    for (std::size_t i = 0; i < s.n_rewards; ++i) {
      for (int t : s.judge.token_sets[i]) {
        s.initial_logits(j, t) = i == j ? own_logit[j] : suppressed;
      }
      s.judge.noise_scale(i, j) = i == j ? own_noise[i] : cross_noise;
    }
  }
}

// Exchangeable criteria, each practiced by its own category. Cross-category
// tokens are suppressed hard enough that criteria do not compete.
Scenario symmetric() {
  Scenario s = base("symmetric", 4, 4);
  make_diagonal(s, {-3.0, -3.0, -3.0, -3.0}, -8.0, {0.05, 0.05, 0.05, 0.05}, 0.01);
  return s;
}

// Criterion i is practiced through category i, with staggered starting
// levels. Criterion 0 has a concave score and the noisiest judge, so it
// gains fastest and carries the most within-group dispersion; the mild
// suppression lets other categories drift toward it once its reward weight
// grows.
Scenario heterogeneous() {
  Scenario s = base("heterogeneous", 4, 4);
  make_diagonal(s, {-3.5, -4.5, -6.0, -7.5}, -4.0, {0.20, 0.05, 0.05, 0.05}, 0.01);
  s.judge.difficulty = {4.0, 1.0, 1.0, 1.0};
  return s;
}

// An easy criterion whose tokens are already common, and a hard one whose
// tokens start rare and only pay off once discovered.
Scenario staged() {
  Scenario s = base("staged", 2, 2);
  make_diagonal(s, {-2.5, -5.25}, -7.0, {0.05, 0.15}, 0.01);
  s.judge.difficulty = {1.0, 4.0};
  return s;
}

}  // namespace

std::vector<std::string> scenario_names() {
  return {"symmetric", "heterogeneous", "staged"};
}

Scenario build_scenario(std::string_view name) {
  if (name == "symmetric") return symmetric();
  if (name == "heterogeneous") return heterogeneous();
  if (name == "staged") return staged();
  throw Error(ErrorCode::kUnknownScenario,
              "unknown scenario: " + std::string(name) +
                  " (expected symmetric, heterogeneous or staged)");
}

Scenario resolve_scenario(const SchedulerConfig& config) {
  Scenario s = build_scenario(config.scenario);
  const auto& o = config.scenario_overrides;
  if (o.token_sets) s.judge.token_sets = *o.token_sets;
  if (o.difficulty) s.judge.difficulty = *o.difficulty;
  if (o.noise_scale) {
    const auto& rows = *o.noise_scale;
    std::size_t cols = rows.empty() ? 0 : rows.front().size();
    Matrix noise(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != cols) {
        throw Error(ErrorCode::kInvalidConfig, "scenario.noise_scale rows differ in length");
      }
      std::copy(rows[i].begin(), rows[i].end(), noise.row(i).begin());
    }
    s.judge.noise_scale = std::move(noise);
  }
  if (s.judge.token_sets.size() != s.n_rewards) {
    throw Error(ErrorCode::kInvalidConfig,
                "scenario.token_sets must have one set per criterion");
  }
  if (config.n_rewards && *config.n_rewards != s.n_rewards) {
    throw Error(ErrorCode::kInvalidConfig,
                "n_rewards " + std::to_string(*config.n_rewards) +
                    " does not match scenario " + s.name + " (" +
                    std::to_string(s.n_rewards) + ")");
  }
  if (config.n_categories && *config.n_categories != s.n_categories) {
    throw Error(ErrorCode::kInvalidConfig,
                "n_categories " + std::to_string(*config.n_categories) +
                    " does not match scenario " + s.name + " (" +
                    std::to_string(s.n_categories) + ")");
  }
  if (config.weight_floor * static_cast<double>(s.n_rewards) >= 1.0) {
    throw Error(ErrorCode::kInvalidConfig, "weight_floor must be < 1/n_rewards");
  }
  s.judge.validate(s.vocab_size, s.n_categories);
  return s;
}

}  // namespace spard
