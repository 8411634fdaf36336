#include <cmath>

#include "doctest.h"
#include "spard/radr.hpp"
#include "test_util.hpp"

using namespace spard;

namespace {

GroupRewards group_of(std::initializer_list<std::vector<double>> rows) {
  GroupRewards g;
  for (const auto& r : rows) g.emplace_back(r);
  return g;
}

GroupRewards random_group(std::mt19937_64& gen, std::size_t g, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GroupRewards out;
  for (std::size_t k = 0; k < g; ++k) {
    std::vector<double> r(n);
    for (auto& v : r) v = u(gen);
    out.emplace_back(std::move(r));
  }
  return out;
}

Matrix random_matrix(std::mt19937_64& gen, std::size_t r, std::size_t c, double scale) {
  std::uniform_real_distribution<double> u(0.0, scale);
  Matrix m(r, c);
  for (auto& v : m.data) v = u(gen);
  return m;
}

}  // namespace

TEST_CASE("group mean absolute deviation") {
  auto mad = group_mad(group_of({{1.0}, {0.0}, {1.0}, {0.0}}), 1);
  CHECK(mad[0] == 0.5);
  CHECK(group_mad(group_of({{0.4, 0.2}, {0.4, 0.2}}), 2) == std::vector<double>{0.0, 0.0});
  CHECK_THROWS_AS(group_mad(group_of({{0.4, 0.2}, {0.4}}), 2), Error);
}

TEST_CASE("attribution averages per-group deviations") {
  std::vector<CategoryBuffer> buffers{CategoryBuffer(0, 4)};
  buffers[0].push(group_of({{1.0}, {0.0}}));  // MAD 0.5
  buffers[0].push(group_of({{0.6}, {0.4}}));  // MAD 0.1
  auto a = compute_attribution(buffers, std::nullopt, 1, 0.1, Execution::kSerial);
  CHECK(a.raw(0, 0) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(a.normalized(0, 0) == 1.0);
  CHECK(a.stale_columns.empty());
}

TEST_CASE("stale columns carry forward") {
  std::vector<CategoryBuffer> buffers{CategoryBuffer(0, 2), CategoryBuffer(1, 2)};
  buffers[0].push(group_of({{1.0, 0.0}, {0.0, 0.0}}));
  buffers[1].push(group_of({{0.0, 1.0}, {0.0, 0.0}}));
  auto first = compute_attribution(buffers, std::nullopt, 2, 0.1, Execution::kSerial);
  CHECK(first.raw(0, 0) == 0.5);
  CHECK(first.raw(1, 1) == 0.5);

  buffers[0].mark_consumed();
  buffers[1].mark_consumed();
  buffers[1].push(group_of({{0.0, 0.2}, {0.0, 0.0}}));
  auto second = compute_attribution(buffers, first, 2, 0.1, Execution::kSerial);
  CHECK(second.stale_columns == std::vector<std::size_t>{0});
  CHECK(second.raw(0, 0) == first.raw(0, 0));
  CHECK(second.raw(1, 0) == first.raw(1, 0));
  // Column 1 averages MADs 0.5 and 0.1.
  CHECK(second.raw(1, 1) == doctest::Approx(0.3).epsilon(1e-15));

  std::vector<CategoryBuffer> partial{CategoryBuffer(0, 2), CategoryBuffer(1, 2)};
  partial[1].push(group_of({{0.0, 1.0}, {0.0, 0.0}}));
  auto cold = compute_attribution(partial, std::nullopt, 2, 0.1, Execution::kSerial);
  CHECK(cold.stale_columns == std::vector<std::size_t>{0});
  CHECK(cold.raw(0, 0) == 0.0);

  std::vector<CategoryBuffer> empty{CategoryBuffer(0, 2)};
  try {
    compute_attribution(empty, std::nullopt, 1, 0.1);
    FAIL("empty buffers accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNoData);
  }
}

TEST_CASE("buffer eviction") {
  CategoryBuffer b(3, 2);
  CHECK(b.category_id() == 3);
  b.push(group_of({{1.0}, {0.0}}));
  b.push(group_of({{0.6}, {0.4}}));
  b.push(group_of({{0.5}, {0.5}}));
  CHECK(b.size() == 2);
  CHECK(b.fresh() == 3);
  CHECK(b.groups().front()[0][0] == 0.6);
  b.mark_consumed();
  CHECK(b.fresh() == 0);
  CHECK_THROWS_AS(CategoryBuffer(0, 0), Error);
}

TEST_CASE("boltzmann normalization") {
  Matrix zeros(1, 2, 0.0);
  auto uni = boltzmann_normalize(zeros, 0.1);
  CHECK(uni(0, 0) == 0.5);
  CHECK(uni(0, 1) == 0.5);

  Matrix tilted(1, 2, 0.0);
  tilted(0, 0) = 0.1;
  auto t = boltzmann_normalize(tilted, 0.1);
  const double e = std::exp(1.0);
  CHECK(t(0, 0) == doctest::Approx(e / (e + 1.0)).epsilon(1e-15));
  CHECK(t(0, 1) == doctest::Approx(1.0 / (e + 1.0)).epsilon(1e-15));

  Matrix bad(1, 2, 0.0);
  bad(0, 1) = std::nan("");
  try {
    boltzmann_normalize(bad, 0.1);
    FAIL("NaN accepted");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::kInvalidAttribution);
  }
  bad(0, 1) = INFINITY;
  CHECK_THROWS_AS(boltzmann_normalize(bad, 0.1), Error);
  CHECK_THROWS_AS(boltzmann_normalize(zeros, 0.0), Error);

  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 100; ++trial) {
    auto raw = random_matrix(gen, 4, 5, 1e4 * 0.1);
    auto p = boltzmann_normalize(raw, 0.1);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(is_on_simplex(p.row(i)));
      for (double v : p.row(i)) CHECK(std::isfinite(v));
    }
  }
}

TEST_CASE("temperature limits") {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix raw(3, 4);
    for (std::size_t i = 0; i < 3; ++i) {
      // Unique row maximum with a clear margin.
      const std::size_t top = (trial + i) % 4;
      for (std::size_t j = 0; j < 4; ++j) raw(i, j) = 0.5 * u(gen);
      raw(i, top) = 0.52 + 0.48 * u(gen);
    }
    auto hot = boltzmann_normalize(raw, 1e6);
    auto cold = boltzmann_normalize(raw, 1e-3);
    for (std::size_t i = 0; i < 3; ++i) {
      const std::size_t top = (trial + i) % 4;
      for (std::size_t j = 0; j < 4; ++j) {
        CHECK(std::abs(hot(i, j) - 0.25) < 1e-6);
        CHECK(std::abs(cold(i, j) - (j == top ? 1.0 : 0.0)) < 1e-4);
      }
    }
  }
}

TEST_CASE("target importance") {
  Matrix f(2, 2);
  f(0, 0) = 1.0;
  f(1, 1) = 1.0;
  auto u = target_importance(SimplexWeights::from_values({0.8, 0.2}), f);
  CHECK(u.values()[0] == 0.8);
  CHECK(u.values()[1] == 0.2);

  Matrix g(2, 2);
  g(0, 0) = 0.5;
  g(0, 1) = 0.5;
  g(1, 0) = 0.7;
  g(1, 1) = 0.3;
  auto v = target_importance(SimplexWeights::from_values({0.5, 0.5}), g);
  CHECK(v[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(v[1] == doctest::Approx(0.4).epsilon(1e-15));

  try {
    target_importance(SimplexWeights::uniform(3), g);
    FAIL("shape mismatch accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kShapeMismatch);
  }

  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + trial % 6, m = 1 + (trial / 6) % 6;
    auto w = testing::random_simplex(gen, n, 0.0);
    auto p = boltzmann_normalize(random_matrix(gen, n, m, 10.0), 0.1);
    auto out = target_importance(w, p);
    CHECK(is_on_simplex(out.values()));
    for (std::size_t j = 0; j < m; ++j) {
      double expect = 0.0;
      for (std::size_t i = 0; i < n; ++i) expect += w[i] * p(i, j);
      CHECK(out[j] == expect);
    }
  }
}

TEST_CASE("data weight ema") {
  auto w = update_data_weights(SimplexWeights::from_values({0.5, 0.5}),
                               SimplexWeights::from_values({1.0, 0.0}), 0.5);
  CHECK(w[0] == 0.75);
  CHECK(w[1] == 0.25);
  CHECK_THROWS_AS(update_data_weights(SimplexWeights::uniform(2), SimplexWeights::uniform(3), 0.5),
                  Error);
  CHECK_THROWS_AS(update_data_weights(SimplexWeights::uniform(2), SimplexWeights::uniform(2), 0.0),
                  Error);

  // Fixed target: geometric convergence with ratio (1 - alpha), monotone.
  auto target = SimplexWeights::from_values({0.1, 0.2, 0.7});
  auto cur = SimplexWeights::uniform(3);
  double prev_gap = testing::linf(cur.values(), target.values());
  for (int t = 1; t <= 30; ++t) {
    cur = update_data_weights(cur, target, 0.3);
    const double gap = testing::linf(cur.values(), target.values());
    CHECK(gap <= prev_gap);
    CHECK(gap == doctest::Approx(std::pow(0.7, t) * (0.7 - 1.0 / 3.0)).epsilon(1e-9));
    prev_gap = gap;
  }
}

TEST_CASE("serial and parallel attribution agree") {
  std::mt19937_64 gen(13);
  std::vector<CategoryBuffer> buffers;
  for (std::size_t j = 0; j < 6; ++j) {
    buffers.emplace_back(j, 5);
    for (std::size_t k = 0; k < 3 + j; ++k) buffers[j].push(random_group(gen, 8, 4));
  }
  buffers[2].mark_consumed();
  auto prev = compute_attribution(buffers, std::nullopt, 4, 0.1, Execution::kSerial);
  auto s = compute_attribution(buffers, prev, 4, 0.1, Execution::kSerial);
  auto p = compute_attribution(buffers, prev, 4, 0.1, Execution::kParallel);
  CHECK(s == p);
  CHECK(boltzmann_normalize(s.raw, 0.1, Execution::kSerial) ==
        boltzmann_normalize(s.raw, 0.1, Execution::kParallel));
}
