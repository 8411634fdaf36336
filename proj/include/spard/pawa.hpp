// Progress-aware reward-weight adaptation.
//
// Reward statistics are tracked as exponential moving averages; the gain of
// a dimension is the change of its lower confidence bound (mu - beta*sigma)
// since the last weight-update event, and the weights move by an
// exponentiated-gradient step, the closed-form maximizer of
//   q^T w' - (1/eta) KL(w' || w)   over the simplex.

#ifndef SPARD_PAWA_HPP_
#define SPARD_PAWA_HPP_

#include <span>
#include <vector>

#include "spard/core.hpp"

namespace spard {

// Reliable performance gain per reward dimension. Entries are finite.
struct GainVector {
  std::vector<double> q;

  std::size_t size() const { return q.size(); }
};

// mu' = alpha * batch_mean + (1 - alpha) * mu, likewise sigma with the
// population standard deviation of the batch. Snapshots are untouched.
DimensionStats ema_update(const DimensionStats& stats,
                          std::span<const RewardVector> batch_rewards,
                          double alpha);

// Throws kNotWarmedUp until take_snapshot has been called once.
GainVector reliable_gain(const DimensionStats& stats, double lcb_beta);

DimensionStats take_snapshot(DimensionStats stats);

// w_i' proportional to w_i * exp(eta * q_i), evaluated in the log domain.
// Zero weights stay at zero. Throws kInvalidGain for non-finite gains.
SimplexWeights update_reward_weights(const SimplexWeights& w,
                                     const GainVector& q, double eta);

// Lifts every entry to at least `floor` and renormalizes; a zero floor is
// the identity.
SimplexWeights apply_weight_floor(const SimplexWeights& w, double floor);

// Brute-force maximizer of q^T w' - (1/eta) KL(w' || w): exhaustive search
// over the simplex grid {k / grid_resolution}, then pairwise golden-section
// sweeps from the best grid point. Independent of the closed form above.
// Requires N <= 4 (kOracleTooLarge) and strictly positive w.
SimplexWeights mirror_descent_oracle(const SimplexWeights& w,
                                     const GainVector& q, double eta,
                                     int grid_resolution);

// Objective the oracle maximizes, exposed for tests.
double mirror_descent_objective(std::span<const double> candidate,
                                std::span<const double> w,
                                std::span<const double> q, double eta);

}  // namespace spard

#endif  // SPARD_PAWA_HPP_
