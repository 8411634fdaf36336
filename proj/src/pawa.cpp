#include "spard/pawa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spard {
namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::kShapeMismatch, std::string(what) + ": length mismatch");
  }
}

}  // namespace

DimensionStats ema_update(const DimensionStats& stats,
                          std::span<const RewardVector> batch_rewards,
                          double alpha) {
  if (batch_rewards.empty()) {
    throw Error(ErrorCode::kEmptyBatch, "ema_update: empty batch");
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "alpha must be in (0,1]");
  }
  const std::size_t n = stats.size();
  const double count = static_cast<double>(batch_rewards.size());
  std::vector<double> mean(n, 0.0);
  for (const auto& r : batch_rewards) {
    require_same_length(r.size(), n, "ema_update");
    for (std::size_t i = 0; i < n; ++i) mean[i] += r[i];
  }
  for (auto& m : mean) m /= count;
  std::vector<double> var(n, 0.0);
  for (const auto& r : batch_rewards) {
    for (std::size_t i = 0; i < n; ++i) {
      double d = r[i] - mean[i];
      var[i] += d * d;
    }
  }

  DimensionStats out = stats;
  for (std::size_t i = 0; i < n; ++i) {
    double sd = std::sqrt(var[i] / count);
    out.mu[i] = alpha * mean[i] + (1.0 - alpha) * stats.mu[i];
    out.sigma[i] = alpha * sd + (1.0 - alpha) * stats.sigma[i];
  }
  ++out.step;
  return out;
}

GainVector reliable_gain(const DimensionStats& stats, double lcb_beta) {
  if (!stats.has_snapshot) {
    throw Error(ErrorCode::kNotWarmedUp,
                "reliable_gain: no snapshot taken yet");
  }
  GainVector g;
  g.q.resize(stats.size());
  for (std::size_t i = 0; i < stats.size(); ++i) {
    double now = stats.mu[i] - lcb_beta * stats.sigma[i];
    double then = stats.mu_snapshot[i] - lcb_beta * stats.sigma_snapshot[i];
    g.q[i] = now - then;
  }
  return g;
}

DimensionStats take_snapshot(DimensionStats stats) {
  stats.mu_snapshot = stats.mu;
  stats.sigma_snapshot = stats.sigma;
  stats.has_snapshot = true;
  return stats;
}

SimplexWeights update_reward_weights(const SimplexWeights& w,
                                     const GainVector& q, double eta) {
  require_same_length(w.size(), q.size(), "update_reward_weights");
  if (!(eta > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "eta must be > 0");
  }
  for (double v : q.q) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidGain, "gain vector has a non-finite entry");
    }
  }
  const std::size_t n = w.size();
  // Centering on max(q) first makes the result depend on q only through
  // differences, so a uniform shift of q cannot change a single bit when
  // the shifted values are exact.
  const double q_max = *std::max_element(q.q.begin(), q.q.end());
  std::vector<double> z(n);
  double z_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = w[i] > 0.0 ? std::log(w[i]) + eta * (q.q[i] - q_max)
                      : -std::numeric_limits<double>::infinity();
    z_max = std::max(z_max, z[i]);
  }
  double total = 0.0;
  for (auto& v : z) {
    v = std::exp(v - z_max);
    total += v;
  }
  for (auto& v : z) v /= total;
  return SimplexWeights::from_values(std::move(z));
}

SimplexWeights apply_weight_floor(const SimplexWeights& w, double floor) {
  if (floor <= 0.0) return w;
  std::vector<double> v(w.values().begin(), w.values().end());
  bool changed = false;
  for (auto& x : v) {
    if (x < floor) {
      x = floor;
      changed = true;
    }
  }
  if (!changed) return w;
  double total = 0.0;
  for (double x : v) total += x;
  for (auto& x : v) x /= total;
  return SimplexWeights::from_values(std::move(v));
}

}  // namespace spard
