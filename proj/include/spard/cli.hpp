// Command-line entry points. Exit codes: 0 success, 1 check failed,
// 2 config/argument error, 3 IO error, 4 data-format error.

#ifndef SPARD_CLI_HPP_
#define SPARD_CLI_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace spard {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitDataFormat = 4;

struct CommonOptions {
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> scenario;
  bool freeze_scheduler = false;
  bool sample_by_weight = false;
};

struct RunCommand {
  CommonOptions common;
  std::int64_t steps = 0;
  std::string out_path;
  std::optional<std::string> reward_log_path;
  std::optional<std::string> checkpoint_path;
};

struct ReplayCommand {
  CommonOptions common;
  std::string log_path;
  std::string out_path;
};

struct OracleCheckCommand {
  std::int64_t trials = 1000;
  std::uint64_t seed = 1;
};

struct ExportCsvCommand {
  std::string in_path;
  std::string out_path;
};

int cmd_run(const RunCommand& cmd, std::ostream& out, std::ostream& err);
int cmd_replay(const ReplayCommand& cmd, std::ostream& out, std::ostream& err);
int cmd_oracle_check(const OracleCheckCommand& cmd, std::ostream& out, std::ostream& err);
int cmd_export_csv(const ExportCsvCommand& cmd, std::ostream& out, std::ostream& err);

struct OracleCheckResult {
  double max_gap = 0.0;
  std::int64_t trials = 0;
  double zero_gain_gap = 0.0;
};

// Closed-form update vs brute-force oracle on `trials` random instances
// (N alternating between 2 and 3). The first instance always has q = 0.
OracleCheckResult run_oracle_check(std::int64_t trials, std::uint64_t seed);

// Parses argv and dispatches.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace spard

#endif  // SPARD_CLI_HPP_
