#include "spard/core.hpp"

#include <cmath>
#include <numeric>

namespace spard {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidDimension: return "invalid-dimension";
    case ErrorCode::kInvalidConfig: return "invalid-config";
    case ErrorCode::kUnknownKey: return "unknown-key";
    case ErrorCode::kCorruptCheckpoint: return "corrupt-checkpoint";
    case ErrorCode::kEmptyBatch: return "empty-batch";
    case ErrorCode::kNotWarmedUp: return "not-warmed-up";
    case ErrorCode::kInvalidGain: return "invalid-gain";
    case ErrorCode::kOracleTooLarge: return "oracle-too-large";
    case ErrorCode::kNoData: return "no-data";
    case ErrorCode::kInvalidAttribution: return "invalid-attribution";
    case ErrorCode::kShapeMismatch: return "shape-mismatch";
    case ErrorCode::kGroupTooSmall: return "group-too-small";
    case ErrorCode::kStaleRollout: return "stale-rollout";
    case ErrorCode::kUnknownScenario: return "unknown-scenario";
    case ErrorCode::kDataFormat: return "data-format";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

bool is_on_simplex(std::span<const double> values, double tolerance) {
  if (values.empty()) return false;
  double sum = 0.0;
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tolerance;
}

SimplexWeights SimplexWeights::uniform(std::size_t n) {
  if (n == 0) {
    throw Error(ErrorCode::kInvalidDimension,
                "simplex dimension must be at least 1");
  }
  return SimplexWeights(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

SimplexWeights SimplexWeights::from_values(std::vector<double> values) {
  if (values.empty()) {
    throw Error(ErrorCode::kInvalidDimension,
                "simplex dimension must be at least 1");
  }
  if (!is_on_simplex(values)) {
    throw Error(ErrorCode::kShapeMismatch,
                "weights are not a point on the probability simplex");
  }
  return SimplexWeights(std::move(values));
}

RewardVector::RewardVector(std::vector<double> scores)
    : scores_(std::move(scores)) {
  for (double s : scores_) {
    if (!(s >= 0.0 && s <= 1.0)) {
      throw Error(ErrorCode::kDataFormat, "reward score outside [0, 1]");
    }
  }
}

RewardVector RewardVector::from_judge_scale(std::span<const int> raw_scores) {
  std::vector<double> scores;
  scores.reserve(raw_scores.size());
  for (int raw : raw_scores) {
    if (raw < 0 || raw > kJudgeScaleMax) {
      throw Error(ErrorCode::kDataFormat, "judge score outside 0..5");
    }
    scores.push_back(static_cast<double>(raw) / kJudgeScaleMax);
  }
  return RewardVector(std::move(scores));
}

DimensionStats DimensionStats::zeros(std::size_t n) {
  DimensionStats s;
  s.mu.assign(n, 0.0);
  s.sigma.assign(n, 0.0);
  s.mu_snapshot.assign(n, 0.0);
  s.sigma_snapshot.assign(n, 0.0);
  return s;
}

}  // namespace spard
