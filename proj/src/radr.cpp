#include "spard/radr.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace spard {

CategoryBuffer::CategoryBuffer(std::size_t category_id, std::size_t capacity)
    : category_id_(category_id), capacity_(capacity) {
  if (capacity == 0) {
    throw Error(ErrorCode::kInvalidConfig, "buffer_capacity must be >= 1");
  }
}

void CategoryBuffer::push(GroupRewards group) {
  if (groups_.size() == capacity_) groups_.pop_front();
  groups_.push_back(std::move(group));
  ++fresh_;
}

std::vector<double> group_mad(const GroupRewards& group, std::size_t n_rewards) {
  std::vector<double> mad(n_rewards, 0.0);
  if (group.empty()) return mad;
  const double g = static_cast<double>(group.size());
  std::vector<double> mean(n_rewards, 0.0);
  for (const auto& r : group) {
    if (r.size() != n_rewards) {
      throw Error(ErrorCode::kShapeMismatch, "group reward length mismatch");
    }
    for (std::size_t i = 0; i < n_rewards; ++i) mean[i] += r[i];
  }
  for (auto& m : mean) m /= g;
  for (const auto& r : group) {
    for (std::size_t i = 0; i < n_rewards; ++i) mad[i] += std::abs(r[i] - mean[i]);
  }
  for (auto& m : mad) m /= g;
  return mad;
}

namespace {

// Column j of F: outer mean over the buffer of per-group MADs.
void attribution_column(const CategoryBuffer& buffer, std::size_t j,
                        std::size_t n_rewards, Matrix& raw) {
  std::vector<double> sum(n_rewards, 0.0);
  for (const auto& group : buffer.groups()) {
    auto mad = group_mad(group, n_rewards);
    for (std::size_t i = 0; i < n_rewards; ++i) sum[i] += mad[i];
  }
  const double count = static_cast<double>(buffer.size());
  for (std::size_t i = 0; i < n_rewards; ++i) raw(i, j) = sum[i] / count;
}

void normalize_row(std::span<const double> in, std::span<double> out,
                   double temperature_mu) {
  double max_logit = -INFINITY;
  for (double v : in) max_logit = std::max(max_logit, v / temperature_mu);
  double total = 0.0;
  for (std::size_t k = 0; k < in.size(); ++k) {
    out[k] = std::exp(in[k] / temperature_mu - max_logit);
    total += out[k];
  }
  for (auto& v : out) v /= total;
}

}  // namespace

Matrix boltzmann_normalize(const Matrix& raw, double temperature_mu,
                           Execution execution) {
  if (!(temperature_mu > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "temperature_mu must be > 0");
  }
  for (double v : raw.data) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidAttribution,
                  "attribution matrix has a non-finite entry");
    }
  }
  Matrix out(raw.rows, raw.cols);
  const auto rows = static_cast<std::ptrdiff_t>(raw.rows);
  if (execution == Execution::kParallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
      normalize_row(raw.row(i), out.row(i), temperature_mu);
    }
  } else {
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
      normalize_row(raw.row(i), out.row(i), temperature_mu);
    }
  }
  return out;
}

AttributionMatrix compute_attribution(
    std::span<const CategoryBuffer> buffers,
    const std::optional<AttributionMatrix>& previous, std::size_t n_rewards,
    double temperature_mu, Execution execution) {
  const std::size_t m = buffers.size();
  if (m == 0 || std::all_of(buffers.begin(), buffers.end(),
                            [](const CategoryBuffer& b) { return b.empty(); })) {
    throw Error(ErrorCode::kNoData, "compute_attribution: all buffers empty");
  }
  if (previous && (previous->raw.rows != n_rewards || previous->raw.cols != m)) {
    throw Error(ErrorCode::kShapeMismatch,
                "compute_attribution: previous matrix has the wrong shape");
  }

  for (const auto& buffer : buffers) {
    for (const auto& group : buffer.groups()) {
      for (const auto& r : group) {
        if (r.size() != n_rewards) {
          throw Error(ErrorCode::kShapeMismatch, "group reward length mismatch");
        }
      }
    }
  }

  AttributionMatrix out;
  out.raw = Matrix(n_rewards, m);
  std::vector<char> stale(m, 0);
  for (std::size_t j = 0; j < m; ++j) {
    if (buffers[j].fresh() == 0 || buffers[j].empty()) stale[j] = 1;
  }

  const auto cols = static_cast<std::ptrdiff_t>(m);
  // Columns are disjoint, so the parallel path writes exactly what the
  // serial path writes.
  if (execution == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t j = 0; j < cols; ++j) {
      if (!stale[j]) attribution_column(buffers[j], j, n_rewards, out.raw);
    }
  } else {
    for (std::ptrdiff_t j = 0; j < cols; ++j) {
      if (!stale[j]) attribution_column(buffers[j], j, n_rewards, out.raw);
    }
  }

  for (std::size_t j = 0; j < m; ++j) {
    if (!stale[j]) continue;
    out.stale_columns.push_back(j);
    for (std::size_t i = 0; i < n_rewards; ++i) {
      out.raw(i, j) = previous ? previous->raw(i, j) : 0.0;
    }
  }
  out.normalized = boltzmann_normalize(out.raw, temperature_mu);
  return out;
}

SimplexWeights target_importance(const SimplexWeights& w_r,
                                 const Matrix& normalized) {
  if (normalized.rows != w_r.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "target_importance: " + std::to_string(w_r.size()) +
                    " reward weights vs " + std::to_string(normalized.rows) +
                    " attribution rows");
  }
  std::vector<double> u(normalized.cols, 0.0);
  for (std::size_t i = 0; i < normalized.rows; ++i) {
    for (std::size_t j = 0; j < normalized.cols; ++j) {
      u[j] += w_r[i] * normalized(i, j);
    }
  }
  // Throws if the rows of `normalized` were not distributions.
  return SimplexWeights::from_values(std::move(u));
}

SimplexWeights update_data_weights(const SimplexWeights& w_d,
                                   const SimplexWeights& u, double alpha) {
  if (w_d.size() != u.size()) {
    throw Error(ErrorCode::kShapeMismatch, "update_data_weights: length mismatch");
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "alpha must be in (0,1]");
  }
  std::vector<double> out(w_d.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = alpha * u[j] + (1.0 - alpha) * w_d[j];
  }
  return SimplexWeights::from_values(std::move(out));
}

}  // namespace spard
