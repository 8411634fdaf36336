// Scheduler state and its binary checkpoint.
//
// Checkpoint layout (all integers and reals little-endian):
//
//   "SPRD"            4 bytes magic
//   version           1 byte  (kCheckpointVersion)
//   payload_length    u64
//   payload:
//     n_rewards u64, n_categories u64, step u64
//     reward_weights  f64[n_rewards]
//     data_weights    f64[n_categories]
//     stats.mu, stats.sigma, stats.mu_snapshot, stats.sigma_snapshot
//                     f64[n_rewards] each
//     stats.has_snapshot u8, stats.step u64
//     has_attribution u8
//     [raw f64[n_rewards*n_categories], normalized f64[...],
//      n_stale u64, stale u64[n_stale]]

#ifndef SPARD_STATE_HPP_
#define SPARD_STATE_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "spard/core.hpp"

namespace spard {

inline constexpr std::uint8_t kCheckpointVersion = 1;

struct SchedulerState {
  SimplexWeights reward_weights = SimplexWeights::uniform(1);
  SimplexWeights data_weights = SimplexWeights::uniform(1);
  DimensionStats stats;
  std::optional<AttributionMatrix> attribution;
  std::uint64_t step = 0;

  // Uniform weights, zero statistics.
  static SchedulerState initial(std::size_t n_rewards,
                                std::size_t n_categories);

  bool operator==(const SchedulerState&) const = default;
};

std::vector<std::uint8_t> save_state(const SchedulerState& state);

// Throws Error(kCorruptCheckpoint) on bad magic, version, length or
// content.
SchedulerState load_state(std::span<const std::uint8_t> bytes);

}  // namespace spard

#endif  // SPARD_STATE_HPP_
