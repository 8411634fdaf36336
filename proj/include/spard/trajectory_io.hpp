// Line-delimited JSON formats for trajectories and reward logs, and the
// flat CSV export.
//
// Trajectory line:
//   {"step":1,"reward_weights":[...],"data_weights":[...],
//    "mean_reward_per_dim":[...],"std_reward_per_dim":[...],
//    "scalar_reward_mean":0.5,
//    "loss":{"total":..,"per_category":[..],"clip_fraction":..,"kl_penalty":..}|null,
//    "gain":[...]|null,"stale_columns":[...]}
//
// Reward log line (one per prompt, sorted by step, constant group size):
//   {"step":1,"category_id":2,"group_rewards":[[r_0..r_{N-1}], ...]}
//
// Reals are written with the shortest representation that round-trips.

#ifndef SPARD_TRAJECTORY_IO_HPP_
#define SPARD_TRAJECTORY_IO_HPP_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spard/simenv.hpp"

namespace spard {

struct RewardLogRecord {
  std::uint64_t step = 0;
  std::size_t category_id = 0;
  std::vector<std::vector<double>> group_rewards;  // G x N

  bool operator==(const RewardLogRecord&) const = default;
};

std::string to_json_line(const TrajectoryRecord& record);
std::string to_json_line(const RewardLogRecord& record);

// Throw Error(kDataFormat) naming the 1-based line number.
TrajectoryRecord parse_trajectory_line(std::string_view line, std::size_t line_no = 1);
RewardLogRecord parse_reward_log_line(std::string_view line, std::size_t line_no = 1);

void write_trajectory(std::ostream& out, std::span<const TrajectoryRecord> records);
std::vector<TrajectoryRecord> read_trajectory(std::istream& in);

// Rejects empty logs, unsorted steps, gaps in the step sequence (steps must
// run 1..T) and changing group sizes.
std::vector<RewardLogRecord> read_reward_log(std::istream& in);

// Groups log records into per-step batches, preserving prompt order.
std::vector<std::vector<PromptRewards>> batches_from_log(
    std::span<const RewardLogRecord> records);

std::vector<RewardLogRecord> log_records_from_batch(
    std::uint64_t step, std::span<const PromptRewards> batch);

void write_trajectory_csv(std::ostream& out, std::span<const TrajectoryRecord> records);

bool operator==(const LossReport& a, const LossReport& b);
bool operator==(const TrajectoryRecord& a, const TrajectoryRecord& b);

}  // namespace spard

#endif  // SPARD_TRAJECTORY_IO_HPP_
