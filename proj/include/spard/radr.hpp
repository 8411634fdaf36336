// Reward-attributed data rebalancing.
//
// Each (reward dimension, category) pair is scored by the mean absolute
// deviation of the dimension's scores inside the category's recent groups.
// Rows are turned into distributions over categories with a temperature
// softmax, mixed by the reward weights into a target importance vector,
// and the data weights track that target with an EMA.

#ifndef SPARD_RADR_HPP_
#define SPARD_RADR_HPP_

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "spard/core.hpp"
#include "spard/parallel.hpp"

namespace spard {

// The G reward vectors of one prompt's group.
using GroupRewards = std::vector<RewardVector>;

// Ring buffer of the most recent groups seen for one category.
class CategoryBuffer {
 public:
  CategoryBuffer(std::size_t category_id, std::size_t capacity);

  // Evicts the oldest group when full.
  void push(GroupRewards group);

  // Groups pushed since the last mark_consumed().
  std::size_t fresh() const { return fresh_; }
  void mark_consumed() { fresh_ = 0; }

  std::size_t category_id() const { return category_id_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return groups_.size(); }
  bool empty() const { return groups_.empty(); }
  const std::deque<GroupRewards>& groups() const { return groups_; }

 private:
  std::size_t category_id_;
  std::size_t capacity_;
  std::size_t fresh_ = 0;
  std::deque<GroupRewards> groups_;
};

// Mean over the group of |r_i - group mean_i|, per dimension.
std::vector<double> group_mad(const GroupRewards& group, std::size_t n_rewards);

// Builds the N x M attribution matrix from buffers[j] (category j). A
// category with no fresh groups keeps its column from `previous` (zeros if
// there is none) and is listed in stale_columns. Throws kNoData if every
// buffer is empty.
AttributionMatrix compute_attribution(
    std::span<const CategoryBuffer> buffers,
    const std::optional<AttributionMatrix>& previous, std::size_t n_rewards,
    double temperature_mu, Execution execution = Execution::kParallel);

// Row-wise softmax(raw / temperature_mu), evaluated in the log domain.
// Throws kInvalidAttribution on non-finite input.
Matrix boltzmann_normalize(const Matrix& raw, double temperature_mu,
                           Execution execution = Execution::kSerial);

// u_j = sum_i w_r[i] * normalized(i, j). The result lies on the simplex by
// construction and is checked, not renormalized.
SimplexWeights target_importance(const SimplexWeights& w_r,
                                 const Matrix& normalized);

// alpha * u + (1 - alpha) * w_d.
SimplexWeights update_data_weights(const SimplexWeights& w_d,
                                   const SimplexWeights& u, double alpha);

}  // namespace spard

#endif  // SPARD_RADR_HPP_
