#include <cmath>

#include "doctest.h"
#include "spard/rlcore.hpp"
#include "spard/trajectory_io.hpp"
#include "test_util.hpp"

using namespace spard;

namespace {

Matrix random_logits(std::mt19937_64& gen, std::size_t m, std::size_t v, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix out(m, v);
  for (auto& x : out.data) x = u(gen);
  return out;
}

GroupRollout scored_rollout(const ToyPolicy& behaviour, std::size_t c, std::size_t g,
                            std::uint64_t seed) {
  Rng rng(seed);
  auto r = sample_group(behaviour, c, g, rng);
  std::vector<double> adv(g);
  for (auto& a : adv) a = rng.uniform();
  r.scalar_rewards = adv;
  r.advantages = group_advantages(adv);
  return r;
}

double fd_gap(const GroupRollout& rollout, const ToyPolicy& policy, const ToyPolicy& ref,
              const GrpoOptions& opts) {
  const auto analytic = grpo_loss(rollout, policy, ref, opts).gradient;
  const double h = 1e-5;
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < policy.logits().data.size(); ++k) {
    Matrix plus = policy.logits(), minus = policy.logits();
    plus.data[k] += h;
    minus.data[k] -= h;
    const double fd = (grpo_loss(rollout, ToyPolicy(plus, policy.seq_len()), ref, opts).loss -
                       grpo_loss(rollout, ToyPolicy(minus, policy.seq_len()), ref, opts).loss) /
                      (2.0 * h);
    num += (fd - analytic.data[k]) * (fd - analytic.data[k]);
    den += analytic.data[k] * analytic.data[k];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-8);
}

}  // namespace

TEST_CASE("scalarize") {
  auto w = SimplexWeights::from_values({0.5, 0.5});
  CHECK(scalarize(RewardVector({0.8, 0.4}), w) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(scalarize(RewardVector({0.8, 0.4}), SimplexWeights::from_values({0.0, 1.0})) == 0.4);
  CHECK_THROWS_AS(scalarize(RewardVector({0.8}), w), Error);
}

TEST_CASE("group advantages") {
  auto a = group_advantages(std::vector<double>{1.0, 0.0});
  CHECK(a == std::vector<double>{1.0, -1.0});
  CHECK(group_advantages(std::vector<double>{0.3, 0.3, 0.3}) == std::vector<double>(3, 0.0));
  try {
    group_advantages(std::vector<double>{0.3});
    FAIL("single-response group accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kGroupTooSmall);
  }

  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> r(2 + trial % 15);
    for (auto& x : r) x = u(gen);
    auto adv = group_advantages(r);
    double mean = 0.0, sq = 0.0;
    for (double x : adv) mean += x;
    mean /= adv.size();
    for (double x : adv) sq += (x - mean) * (x - mean);
    CHECK(std::abs(mean) < 1e-12);
    CHECK(std::abs(std::sqrt(sq / adv.size()) - 1.0) < 1e-12);
  }
}

TEST_CASE("on-policy loss is minus the mean advantage") {
  std::mt19937_64 gen(2);
  ToyPolicy policy(random_logits(gen, 2, 5, 1.0), 4);
  auto r = scored_rollout(policy, 1, 6, 9);
  r.advantages = {0.5, -0.25, 1.0, 0.0, 0.25, -0.5};
  auto res = grpo_loss(r, policy, policy, GrpoOptions{});
  CHECK(res.loss == doctest::Approx(-1.0 / 6.0).epsilon(1e-12));
  CHECK(res.kl_penalty == doctest::Approx(0.0));
  CHECK(res.clip_fraction == 0.0);
  // Only the sampled category's row gets a gradient.
  for (double g : res.gradient.row(0)) CHECK(g == 0.0);

  GrpoOptions exact;
  exact.kl_mode = KlMode::kExact;
  CHECK(grpo_loss(r, policy, policy, exact).loss == doctest::Approx(-1.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("stale rollouts are rejected") {
  ToyPolicy policy = ToyPolicy::uniform(1, 4, 3);
  Rng rng(0);
  auto r = sample_group(policy, 0, 4, rng);
  try {
    grpo_loss(r, policy, policy, GrpoOptions{});
    FAIL("missing advantages accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kStaleRollout);
  }
  r.advantages.assign(4, 0.0);
  r.old_logprobs.clear();
  CHECK_THROWS_AS(grpo_loss(r, policy, policy, GrpoOptions{}), Error);
}

TEST_CASE("analytic gradient matches finite differences") {
  std::mt19937_64 gen(7);
  for (KlMode mode : {KlMode::kEstimator, KlMode::kExact}) {
    GrpoOptions opts;
    opts.kl_mode = mode;
    for (int trial = 0; trial < 20; ++trial) {
      ToyPolicy behaviour(random_logits(gen, 2, 5, 1.0), 4);
      auto r = scored_rollout(behaviour, trial % 2, 4, 100 + trial);
      // Move away from the behaviour policy so that clipping engages.
      ToyPolicy current(random_logits(gen, 2, 5, 1.0), 4);
      ToyPolicy ref(random_logits(gen, 2, 5, 1.0), 4);
      CHECK(fd_gap(r, current, ref, opts) < 1e-4);
    }
  }
}

TEST_CASE("clipped tokens carry no surrogate gradient") {
  ToyPolicy behaviour = ToyPolicy::uniform(1, 3, 2);
  GroupRollout r;
  r.category_id = 0;
  r.group_size = 2;
  r.seq_len = 2;
  r.tokens = {0, 0, 1, 1};
  const double lp = std::log(1.0 / 3.0);
  r.old_logprobs.assign(4, lp);
  r.advantages = {1.0, -1.0};

  // Token 0 far above the upper clip, token 1 far below the lower clip: both
  // terms are clipped and the surrogate is flat.
  Matrix logits(1, 3);
  logits.data = {3.0, -3.0, 0.0};
  ToyPolicy current(logits, 2);
  GrpoOptions opts;
  opts.kl_coef = 0.0;
  auto res = grpo_loss(r, current, behaviour, opts);
  CHECK(res.clip_fraction == 1.0);
  for (double g : res.gradient.data) CHECK(g == 0.0);
  CHECK(res.loss == doctest::Approx(-(1.2 - 0.8) / 2.0).epsilon(1e-12));
}

TEST_CASE("weighted loss") {
  auto w = SimplexWeights::from_values({0.5, 0.5});
  std::vector<std::size_t> both{1, 1};
  auto r = weighted_loss(std::vector<double>{0.6, 0.8}, both, w);
  CHECK(r.total == doctest::Approx(0.7).epsilon(1e-15));

  std::vector<std::size_t> one{3, 0};
  CHECK(weighted_loss(std::vector<double>{1.0, 9.0}, one, w).total == 0.5);

  auto a = weighted_loss(std::vector<double>{0.2, -0.4}, both, w).total;
  auto b = weighted_loss(std::vector<double>{0.6, 0.1}, both, w).total;
  auto ab = weighted_loss(std::vector<double>{0.8, -0.3}, both, w).total;
  CHECK(ab == doctest::Approx(a + b).epsilon(1e-15));

  try {
    weighted_loss(std::vector<double>{0.0, 0.0}, std::vector<std::size_t>{0, 0}, w);
    FAIL("empty batch accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEmptyBatch);
  }
}

TEST_CASE("batch loss: serial and parallel agree") {
  std::mt19937_64 gen(11);
  ToyPolicy policy(random_logits(gen, 4, 8, 1.0), 6);
  ToyPolicy ref(random_logits(gen, 4, 8, 1.0), 6);
  ToyPolicy behaviour(random_logits(gen, 4, 8, 1.0), 6);
  std::vector<GroupRollout> rollouts;
  for (std::size_t b = 0; b < 32; ++b) rollouts.push_back(scored_rollout(behaviour, b % 3, 8, b));
  auto w = testing::random_simplex(gen, 4);

  auto s = batch_grpo_loss(rollouts, policy, ref, GrpoOptions{}, w, {Execution::kSerial, ReductionOrder::kFixed});
  auto p = batch_grpo_loss(rollouts, policy, ref, GrpoOptions{}, w, {Execution::kParallel, ReductionOrder::kFixed});
  CHECK(s.report == p.report);
  CHECK(s.gradient == p.gradient);
  CHECK(s.counts == std::vector<std::size_t>{11, 11, 10, 0});

  auto u = batch_grpo_loss(rollouts, policy, ref, GrpoOptions{}, w, {Execution::kParallel, ReductionOrder::kUnordered});
  CHECK(u.report.total == doctest::Approx(s.report.total).epsilon(1e-12));
  CHECK(testing::linf(u.gradient.data, s.gradient.data) < 1e-12);

  // Category 3 is absent: no gradient on its row.
  for (double g : s.gradient.row(3)) CHECK(g == 0.0);

  // Per-category means, combined with the weights.
  double expect = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    double sum = 0.0;
    for (const auto& r : rollouts) {
      if (r.category_id == c) sum += grpo_loss(r, policy, ref, GrpoOptions{}).loss;
    }
    expect += w[c] * sum / static_cast<double>(s.counts[c]);
  }
  CHECK(s.report.total == doctest::Approx(expect).epsilon(1e-12));
}
