#include "spard/trajectory_io.hpp"

#include <cstdio>
#include <istream>
#include <ostream>

#include "json.hpp"

namespace spard {
namespace {

using nlohmann::json;

[[noreturn]] void bad_line(std::size_t line_no, const std::string& what) {
  throw Error(ErrorCode::kDataFormat, "line " + std::to_string(line_no) + ": " + what);
}

std::vector<double> reals(const json& j, const char* key, std::size_t line_no) {
  if (!j.contains(key) || !j.at(key).is_array()) {
    bad_line(line_no, std::string("missing array field '") + key + "'");
  }
  std::vector<double> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_number()) bad_line(line_no, std::string("non-numeric entry in '") + key + "'");
    out.push_back(v.get<double>());
  }
  return out;
}

std::uint64_t unsigned_field(const json& j, const char* key, std::size_t line_no) {
  if (!j.contains(key) || !j.at(key).is_number_unsigned()) {
    bad_line(line_no, std::string("missing non-negative integer field '") + key + "'");
  }
  return j.at(key).get<std::uint64_t>();
}

json parse_object(std::string_view line, std::size_t line_no) {
  json j = json::parse(line.begin(), line.end(), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) bad_line(line_no, "malformed JSON");
  if (!j.is_object()) bad_line(line_no, "expected a JSON object");
  return j;
}

std::string fmt_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string to_json_line(const TrajectoryRecord& r) {
  json j;
  j["step"] = r.step;
  j["reward_weights"] = r.reward_weights;
  j["data_weights"] = r.data_weights;
  j["mean_reward_per_dim"] = r.mean_reward_per_dim;
  j["std_reward_per_dim"] = r.std_reward_per_dim;
  j["scalar_reward_mean"] = r.scalar_reward_mean;
  if (r.loss_report) {
    j["loss"] = {{"total", r.loss_report->total},
                 {"per_category", r.loss_report->per_category},
                 {"clip_fraction", r.loss_report->clip_fraction},
                 {"kl_penalty", r.loss_report->kl_penalty}};
  } else {
    j["loss"] = nullptr;
  }
  j["gain"] = r.gain_vector ? json(*r.gain_vector) : json(nullptr);
  j["stale_columns"] = r.stale_columns;
  return j.dump();
}

std::string to_json_line(const RewardLogRecord& r) {
  json j;
  j["step"] = r.step;
  j["category_id"] = r.category_id;
  j["group_rewards"] = r.group_rewards;
  return j.dump();
}

TrajectoryRecord parse_trajectory_line(std::string_view line, std::size_t line_no) {
  json j = parse_object(line, line_no);
  TrajectoryRecord r;
  r.step = unsigned_field(j, "step", line_no);
  r.reward_weights = reals(j, "reward_weights", line_no);
  r.data_weights = reals(j, "data_weights", line_no);
  r.mean_reward_per_dim = reals(j, "mean_reward_per_dim", line_no);
  r.std_reward_per_dim = reals(j, "std_reward_per_dim", line_no);
  if (!j.contains("scalar_reward_mean") || !j["scalar_reward_mean"].is_number()) {
    bad_line(line_no, "missing 'scalar_reward_mean'");
  }
  r.scalar_reward_mean = j["scalar_reward_mean"].get<double>();
  if (j.contains("loss") && !j["loss"].is_null()) {
    const json& l = j["loss"];
    if (!l.is_object() || !l.contains("total") || !l.contains("clip_fraction") ||
        !l.contains("kl_penalty")) {
      bad_line(line_no, "malformed 'loss'");
    }
    LossReport report;
    report.total = l["total"].get<double>();
    report.per_category = reals(l, "per_category", line_no);
    report.clip_fraction = l["clip_fraction"].get<double>();
    report.kl_penalty = l["kl_penalty"].get<double>();
    r.loss_report = std::move(report);
  }
  if (j.contains("gain") && !j["gain"].is_null()) r.gain_vector = reals(j, "gain", line_no);
  if (j.contains("stale_columns")) {
    for (const auto& v : j["stale_columns"]) {
      if (!v.is_number_unsigned()) bad_line(line_no, "bad stale column");
      r.stale_columns.push_back(v.get<std::size_t>());
    }
  }
  return r;
}

RewardLogRecord parse_reward_log_line(std::string_view line, std::size_t line_no) {
  json j = parse_object(line, line_no);
  RewardLogRecord r;
  r.step = unsigned_field(j, "step", line_no);
  r.category_id = unsigned_field(j, "category_id", line_no);
  if (!j.contains("group_rewards") || !j["group_rewards"].is_array()) {
    bad_line(line_no, "missing 'group_rewards'");
  }
  for (const auto& row : j["group_rewards"]) {
    if (!row.is_array()) bad_line(line_no, "group_rewards rows must be arrays");
    std::vector<double> scores;
    for (const auto& v : row) {
      if (!v.is_number()) bad_line(line_no, "non-numeric reward");
      double s = v.get<double>();
      if (!(s >= 0.0 && s <= 1.0)) bad_line(line_no, "reward outside [0,1]");
      scores.push_back(s);
    }
    if (!r.group_rewards.empty() && scores.size() != r.group_rewards.front().size()) {
      bad_line(line_no, "reward vectors differ in length");
    }
    r.group_rewards.push_back(std::move(scores));
  }
  if (r.group_rewards.empty()) bad_line(line_no, "empty group");
  return r;
}

void write_trajectory(std::ostream& out, std::span<const TrajectoryRecord> records) {
  for (const auto& r : records) out << to_json_line(r) << '\n';
}

std::vector<TrajectoryRecord> read_trajectory(std::istream& in) {
  std::vector<TrajectoryRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    out.push_back(parse_trajectory_line(line, line_no));
  }
  return out;
}

std::vector<RewardLogRecord> read_reward_log(std::istream& in) {
  std::vector<RewardLogRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    RewardLogRecord r = parse_reward_log_line(line, line_no);
    if (out.empty()) {
      if (r.step != 1) bad_line(line_no, "log must start at step 1");
    } else {
      const auto& prev = out.back();
      if (r.step != prev.step && r.step != prev.step + 1) {
        bad_line(line_no, "steps must be sorted and contiguous");
      }
      if (r.group_rewards.size() != prev.group_rewards.size()) {
        bad_line(line_no, "group size changes within the log");
      }
      if (r.group_rewards.front().size() != prev.group_rewards.front().size()) {
        bad_line(line_no, "reward dimension changes within the log");
      }
    }
    out.push_back(std::move(r));
  }
  if (out.empty()) throw Error(ErrorCode::kDataFormat, "line 0: empty reward log");
  return out;
}

std::vector<std::vector<PromptRewards>> batches_from_log(
    std::span<const RewardLogRecord> records) {
  std::vector<std::vector<PromptRewards>> batches;
  for (const auto& r : records) {
    if (batches.size() < r.step) batches.resize(r.step);
    PromptRewards p;
    p.category_id = r.category_id;
    for (const auto& scores : r.group_rewards) p.rewards.emplace_back(scores);
    batches[r.step - 1].push_back(std::move(p));
  }
  return batches;
}

std::vector<RewardLogRecord> log_records_from_batch(
    std::uint64_t step, std::span<const PromptRewards> batch) {
  std::vector<RewardLogRecord> out;
  out.reserve(batch.size());
  for (const auto& p : batch) {
    RewardLogRecord r;
    r.step = step;
    r.category_id = p.category_id;
    for (const auto& rv : p.rewards) {
      r.group_rewards.emplace_back(rv.scores().begin(), rv.scores().end());
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_trajectory_csv(std::ostream& out, std::span<const TrajectoryRecord> records) {
  if (records.empty()) return;
  const std::size_t n = records.front().reward_weights.size();
  const std::size_t m = records.front().data_weights.size();
  out << "step";
  for (std::size_t i = 0; i < n; ++i) out << ",reward_weight_" << i;
  for (std::size_t j = 0; j < m; ++j) out << ",data_weight_" << j;
  for (std::size_t i = 0; i < n; ++i) out << ",mean_reward_" << i;
  for (std::size_t i = 0; i < n; ++i) out << ",std_reward_" << i;
  out << ",scalar_reward_mean,loss_total,clip_fraction,kl_penalty,weight_update\n";
  for (const auto& r : records) {
    if (r.reward_weights.size() != n || r.data_weights.size() != m) {
      throw Error(ErrorCode::kDataFormat, "trajectory records differ in shape");
    }
    out << r.step;
    for (double v : r.reward_weights) out << ',' << fmt_real(v);
    for (double v : r.data_weights) out << ',' << fmt_real(v);
    for (double v : r.mean_reward_per_dim) out << ',' << fmt_real(v);
    for (double v : r.std_reward_per_dim) out << ',' << fmt_real(v);
    out << ',' << fmt_real(r.scalar_reward_mean);
    if (r.loss_report) {
      out << ',' << fmt_real(r.loss_report->total) << ','
          << fmt_real(r.loss_report->clip_fraction) << ','
          << fmt_real(r.loss_report->kl_penalty);
    } else {
      out << ",,,";
    }
    out << ',' << (r.gain_vector ? 1 : 0) << '\n';
  }
}

bool operator==(const LossReport& a, const LossReport& b) {
  return a.total == b.total && a.per_category == b.per_category &&
         a.clip_fraction == b.clip_fraction && a.kl_penalty == b.kl_penalty;
}

bool operator==(const TrajectoryRecord& a, const TrajectoryRecord& b) {
  return a.step == b.step && a.reward_weights == b.reward_weights &&
         a.data_weights == b.data_weights &&
         a.mean_reward_per_dim == b.mean_reward_per_dim &&
         a.std_reward_per_dim == b.std_reward_per_dim &&
         a.scalar_reward_mean == b.scalar_reward_mean &&
         a.loss_report == b.loss_report && a.gain_vector == b.gain_vector &&
         a.stale_columns == b.stale_columns;
}

}  // namespace spard
