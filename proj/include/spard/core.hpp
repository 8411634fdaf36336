// Domain types shared by the scheduler, the GRPO loss and the simulator.

#ifndef SPARD_CORE_HPP_
#define SPARD_CORE_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace spard {

enum class ErrorCode {
  kInvalidDimension,
  kInvalidConfig,
  kUnknownKey,
  kCorruptCheckpoint,
  kEmptyBatch,
  kNotWarmedUp,
  kInvalidGain,
  kOracleTooLarge,
  kNoData,
  kInvalidAttribution,
  kShapeMismatch,
  kGroupTooSmall,
  kStaleRollout,
  kUnknownScenario,
  kDataFormat,
  kIo,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Absolute tolerance on |sum - 1| for every simplex vector in the library.
inline constexpr double kSimplexTolerance = 1e-9;

bool is_on_simplex(std::span<const double> values,
                   double tolerance = kSimplexTolerance);

// A point on the probability simplex. Used for both the reward weights
// (one entry per judged criterion) and the data weights (one entry per
// prompt category). The length is fixed at construction.
class SimplexWeights {
 public:
  static SimplexWeights uniform(std::size_t n);

  // Throws kInvalidDimension for an empty vector and kShapeMismatch if the
  // values are negative, non-finite or do not sum to one.
  static SimplexWeights from_values(std::vector<double> values);

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  bool operator==(const SimplexWeights&) const = default;

 private:
  explicit SimplexWeights(std::vector<double> values)
      : values_(std::move(values)) {}

  std::vector<double> values_;
};

// Judges grade on an integer 0..5 scale; scores are divided by this at
// ingestion so that every dimension lives on [0, 1].
inline constexpr int kJudgeScaleMax = 5;

// Per-response vector of criterion scores, each in [0, 1].
class RewardVector {
 public:
  RewardVector() = default;
  explicit RewardVector(std::vector<double> scores);

  static RewardVector from_judge_scale(std::span<const int> raw_scores);

  std::span<const double> scores() const { return scores_; }
  std::size_t size() const { return scores_.size(); }
  double operator[](std::size_t i) const { return scores_[i]; }

  bool operator==(const RewardVector&) const = default;

 private:
  std::vector<double> scores_;
};

// EMA reward statistics per dimension plus the copy frozen at the last
// weight-update event.
struct DimensionStats {
  std::vector<double> mu;
  std::vector<double> sigma;
  std::vector<double> mu_snapshot;
  std::vector<double> sigma_snapshot;
  bool has_snapshot = false;
  std::uint64_t step = 0;

  static DimensionStats zeros(std::size_t n);
  std::size_t size() const { return mu.size(); }

  bool operator==(const DimensionStats&) const = default;
};

// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return data[i * cols + j];
  }
  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const {
    return {data.data() + i * cols, cols};
  }

  bool operator==(const Matrix&) const = default;
};

// Reward-to-category attribution. `raw` holds mean absolute deviations,
// `normalized` the row-wise Boltzmann distribution over categories.
struct AttributionMatrix {
  Matrix raw;
  Matrix normalized;
  std::vector<std::size_t> stale_columns;

  bool operator==(const AttributionMatrix&) const = default;
};

}  // namespace spard

#endif  // SPARD_CORE_HPP_
