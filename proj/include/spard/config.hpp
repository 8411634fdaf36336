// Scheduler/training configuration and its TOML-style file format.
//
// The file is a sequence of `key = value` lines, optionally grouped in
// `[section]` headers. Scheduler and training keys live at the top level or
// under `[scheduler]`; the synthetic scenario lives under `[scenario]`.
// Values are integers, floats, booleans, double-quoted strings, or
// (nested) arrays of those. `#` starts a comment.

#ifndef SPARD_CONFIG_HPP_
#define SPARD_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "spard/core.hpp"

namespace spard {

struct ConfigValue;
using ConfigArray = std::vector<ConfigValue>;

struct ConfigValue {
  std::variant<std::int64_t, double, bool, std::string, ConfigArray> value;
  int line = 0;
};

// section name ("" for top level) -> key -> value
using ConfigDocument =
    std::map<std::string, std::map<std::string, ConfigValue>>;

// Throws Error(kInvalidConfig) with the offending line on syntax errors.
ConfigDocument parse_config_text(std::string_view text);

enum class KlMode { kEstimator, kExact };

// Sentinel for interval_k meaning "the scheduler never fires".
inline constexpr std::uint64_t kNeverUpdate =
    std::numeric_limits<std::uint64_t>::max();

struct ScenarioOverrides {
  std::optional<std::vector<std::vector<int>>> token_sets;
  std::optional<std::vector<std::vector<double>>> noise_scale;
  std::optional<std::vector<double>> difficulty;
};

struct SchedulerConfig {
  // Unset dimensions are taken from the scenario.
  std::optional<std::size_t> n_rewards;
  std::optional<std::size_t> n_categories;

  double alpha = 0.5;
  double lcb_beta = 0.1;
  double eta = 3.0;
  double temperature_mu = 0.1;
  std::uint64_t interval_k = 10;
  std::size_t buffer_capacity = 64;
  std::size_t group_size = 8;
  std::size_t batch_size = 32;
  double kl_coef = 0.04;
  double clip_eps = 0.2;
  double policy_lr = 4.0;
  double weight_floor = 1e-4;
  KlMode kl_mode = KlMode::kEstimator;
  bool sample_by_weight = false;
  std::uint64_t seed = 1;

  std::string scenario = "heterogeneous";
  ScenarioOverrides scenario_overrides;

  bool frozen() const { return interval_k == kNeverUpdate; }
};

// Checks every range invariant. Unknown keys are rejected. Range errors
// name the field, e.g. "alpha must be in (0,1]".
SchedulerConfig validate_config(const ConfigDocument& raw);

// Re-checks an in-memory config (e.g. after CLI overrides).
void check_config(const SchedulerConfig& config);

SchedulerConfig load_config_file(const std::filesystem::path& path);

}  // namespace spard

#endif  // SPARD_CONFIG_HPP_
