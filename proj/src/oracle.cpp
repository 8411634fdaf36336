// Exhaustive solver for the KL-regularized linear maximization over the
// simplex. It never uses the softmax form of the solution; it only
// evaluates the objective.

#include <algorithm>
#include <cmath>
#include <limits>

#include "spard/pawa.hpp"

namespace spard {
namespace {

constexpr std::size_t kMaxOracleDimension = 4;
constexpr int kMaxSweeps = 100;
constexpr int kGoldenIterations = 200;

double entropy_term(double x, double w) {
  return x > 0.0 ? x * std::log(x / w) : 0.0;
}

// Visits every composition of `remaining` into the trailing coordinates.
template <typename Visit>
void enumerate_grid(std::vector<int>& counts, std::size_t index, int remaining,
                    Visit&& visit) {
  if (index + 1 == counts.size()) {
    counts[index] = remaining;
    visit(counts);
    return;
  }
  for (int k = 0; k <= remaining; ++k) {
    counts[index] = k;
    enumerate_grid(counts, index + 1, remaining - k, visit);
  }
}

// Maximizes the objective along x_i += t, x_j -= t.
double golden_pair_step(std::vector<double>& x, std::size_t i, std::size_t j,
                        std::span<const double> w, std::span<const double> q,
                        double eta) {
  const double xi = x[i];
  const double xj = x[j];
  // Only the pair-dependent part of the objective; keeps magnitudes small so
  // the line search resolves the maximizer more finely.
  auto f = [&](double t) {
    double a = xi + t;
    double b = xj - t;
    return q[i] * a + q[j] * b -
           (entropy_term(a, w[i]) + entropy_term(b, w[j])) / eta;
  };
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = -xi;
  double hi = xj;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < kGoldenIterations && hi - lo > 1e-17; ++it) {
    if (fc < fd) {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = f(d);
    } else {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = f(c);
    }
  }
  double t = 0.5 * (lo + hi);
  if (f(t) < f(0.0)) t = 0.0;
  x[i] = std::max(0.0, xi + t);
  x[j] = std::max(0.0, xj - t);
  return std::abs(t);
}

}  // namespace

double mirror_descent_objective(std::span<const double> candidate,
                                std::span<const double> w,
                                std::span<const double> q, double eta) {
  double linear = 0.0;
  double kl = 0.0;
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    linear += q[i] * candidate[i];
    kl += entropy_term(candidate[i], w[i]);
  }
  return linear - kl / eta;
}

SimplexWeights mirror_descent_oracle(const SimplexWeights& w,
                                     const GainVector& q, double eta,
                                     int grid_resolution) {
  const std::size_t n = w.size();
  if (n > kMaxOracleDimension) {
    throw Error(ErrorCode::kOracleTooLarge,
                "mirror_descent_oracle supports at most 4 dimensions");
  }
  if (q.size() != n) {
    throw Error(ErrorCode::kShapeMismatch, "mirror_descent_oracle: length mismatch");
  }
  if (grid_resolution < 1 || !(eta > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig,
                "mirror_descent_oracle: bad resolution or eta");
  }
  for (double v : w.values()) {
    if (!(v > 0.0)) {
      throw Error(ErrorCode::kShapeMismatch,
                  "mirror_descent_oracle: weights must be strictly positive");
    }
  }

  const auto wv = w.values();
  std::vector<double> best(n, 1.0 / static_cast<double>(n));
  double best_value = -std::numeric_limits<double>::infinity();
  std::vector<int> counts(n, 0);
  std::vector<double> point(n);
  const double step = 1.0 / grid_resolution;
  enumerate_grid(counts, 0, grid_resolution, [&](const std::vector<int>& c) {
    for (std::size_t i = 0; i < n; ++i) point[i] = c[i] * step;
    double value = mirror_descent_objective(point, wv, q.q, eta);
    if (value > best_value) {
      best_value = value;
      best = point;
    }
  });

  for (int sweep = 0; sweep < kMaxSweeps && n > 1; ++sweep) {
    double moved = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        moved = std::max(moved, golden_pair_step(best, i, j, wv, q.q, eta));
      }
    }
    if (moved < 1e-15) break;
  }

  double total = 0.0;
  for (double v : best) total += v;
  for (auto& v : best) v /= total;
  return SimplexWeights::from_values(std::move(best));
}

}  // namespace spard
