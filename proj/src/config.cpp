#include "spard/config.hpp"

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace spard {
namespace {

[[noreturn]] void syntax_error(int line, const std::string& what) {
  throw Error(ErrorCode::kInvalidConfig,
              "config line " + std::to_string(line) + ": " + what);
}

[[noreturn]] void field_error(const std::string& field,
                              const std::string& what) {
  throw Error(ErrorCode::kInvalidConfig, field + " " + what);
}

class ValueParser {
 public:
  ValueParser(std::string_view text, int line) : text_(text), line_(line) {}

  ConfigValue parse() {
    ConfigValue v = parse_value();
    skip_ws();
    if (pos_ != text_.size()) syntax_error(line_, "trailing characters");
    return v;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  ConfigValue parse_value() {
    skip_ws();
    if (pos_ >= text_.size()) syntax_error(line_, "missing value");
    char c = text_[pos_];
    if (c == '"') return {parse_string(), line_};
    if (c == '[') return {parse_array(), line_};
    return parse_scalar();
  }

  std::string parse_string() {
    ++pos_;
    std::string out;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      char c = text_[pos_++];
      if (c == '\\' && pos_ < text_.size()) {
        char e = text_[pos_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: syntax_error(line_, "bad escape in string");
        }
      } else {
        out += c;
      }
    }
    if (pos_ >= text_.size()) syntax_error(line_, "unterminated string");
    ++pos_;
    return out;
  }

  ConfigArray parse_array() {
    ++pos_;
    ConfigArray out;
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == ']') {
      ++pos_;
      return out;
    }
    while (true) {
      out.push_back(parse_value());
      skip_ws();
      if (pos_ >= text_.size()) syntax_error(line_, "unterminated array");
      if (text_[pos_] == ',') {
        ++pos_;
        skip_ws();
        // trailing comma
        if (pos_ < text_.size() && text_[pos_] == ']') {
          ++pos_;
          return out;
        }
        continue;
      }
      if (text_[pos_] == ']') {
        ++pos_;
        return out;
      }
      syntax_error(line_, "expected ',' or ']' in array");
    }
  }

  ConfigValue parse_scalar() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != ']' &&
           !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    std::string token(text_.substr(start, pos_ - start));
    if (token == "true") return {true, line_};
    if (token == "false") return {false, line_};
    if (token == "inf" || token == "+inf") {
      return {std::numeric_limits<double>::infinity(), line_};
    }
    std::string digits;
    for (char c : token) {
      if (c != '_') digits += c;
    }
    if (digits.empty()) syntax_error(line_, "empty value");
    bool is_integer = true;
    for (std::size_t i = 0; i < digits.size(); ++i) {
      char c = digits[i];
      if ((c == '-' || c == '+') && i == 0) continue;
      if (!std::isdigit(static_cast<unsigned char>(c))) is_integer = false;
    }
    errno = 0;
    char* end = nullptr;
    if (is_integer) {
      long long v = std::strtoll(digits.c_str(), &end, 10);
      if (errno == ERANGE || *end != '\0') {
        // Large unsigned seeds are accepted through the unsigned path.
        errno = 0;
        unsigned long long u = std::strtoull(digits.c_str(), &end, 10);
        if (errno == ERANGE || *end != '\0' || digits[0] == '-') {
          syntax_error(line_, "integer out of range: " + token);
        }
        return {static_cast<std::int64_t>(u), line_};
      }
      return {static_cast<std::int64_t>(v), line_};
    }
    double v = std::strtod(digits.c_str(), &end);
    if (*end != '\0' || errno == ERANGE) {
      syntax_error(line_, "unrecognized value: " + token);
    }
    return {v, line_};
  }

  std::string_view text_;
  int line_;
  std::size_t pos_ = 0;
};

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (c == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

int bracket_balance(const std::string& s) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == '"' && (i == 0 || s[i - 1] != '\\')) in_string = !in_string;
    if (in_string) continue;
    if (c == '[') ++depth;
    if (c == ']') --depth;
  }
  return depth;
}

double as_real(const std::string& field, const ConfigValue& v) {
  if (auto* i = std::get_if<std::int64_t>(&v.value)) {
    return static_cast<double>(*i);
  }
  if (auto* d = std::get_if<double>(&v.value)) return *d;
  field_error(field, "must be a number");
}

std::uint64_t as_uint(const std::string& field, const ConfigValue& v) {
  if (auto* i = std::get_if<std::int64_t>(&v.value)) {
    return static_cast<std::uint64_t>(*i);
  }
  field_error(field, "must be an integer");
}

std::int64_t as_int(const std::string& field, const ConfigValue& v) {
  if (auto* i = std::get_if<std::int64_t>(&v.value)) return *i;
  field_error(field, "must be an integer");
}

bool as_bool(const std::string& field, const ConfigValue& v) {
  if (auto* b = std::get_if<bool>(&v.value)) return *b;
  field_error(field, "must be true or false");
}

std::string as_string(const std::string& field, const ConfigValue& v) {
  if (auto* s = std::get_if<std::string>(&v.value)) return *s;
  field_error(field, "must be a string");
}

const ConfigArray& as_array(const std::string& field, const ConfigValue& v) {
  if (auto* a = std::get_if<ConfigArray>(&v.value)) return *a;
  field_error(field, "must be an array");
}

std::size_t as_positive_size(const std::string& field, const ConfigValue& v) {
  std::int64_t n = as_int(field, v);
  if (n < 1) field_error(field, "must be a positive integer");
  return static_cast<std::size_t>(n);
}

void apply_scheduler_key(SchedulerConfig& c, const std::string& key,
                         const ConfigValue& v) {
  static const std::map<std::string,
                        std::function<void(SchedulerConfig&,
                                           const ConfigValue&)>>
      kSetters = {
          {"n_rewards",
           [](SchedulerConfig& c, const ConfigValue& v) {
             c.n_rewards = as_positive_size("n_rewards", v);
           }},
          {"n_categories",
           [](SchedulerConfig& c, const ConfigValue& v) {
             c.n_categories = as_positive_size("n_categories", v);
           }},
          {"alpha",
           [](SchedulerConfig& c, const ConfigValue& v) {
             c.alpha = as_real("alpha", v);
           }},
          {"lcb_beta",
           [](SchedulerConfig& c, const ConfigValue& v) {
             c.lcb_beta = as_real("lcb_beta", v);
           }},
          {"eta",
           [](SchedulerConfig& c, const ConfigValue& v) {
             c.eta = as_real("eta", v);
           }},
          {"temperature_mu",
           [](SchedulerConfig& c, const ConfigValue& v) {
             c.temperature_mu = as_real("temperature_mu", v);
           }},
          {"interval_k",
           [](SchedulerConfig& c, const ConfigValue& v) {
             if (auto* s = std::get_if<std::string>(&v.value)) {
               if (*s != "inf") field_error("interval_k", "must be >= 1 or \"inf\"");
               c.interval_k = kNeverUpdate;
             } else if (auto* d = std::get_if<double>(&v.value)) {
               if (!std::isinf(*d)) field_error("interval_k", "must be an integer or inf");
               c.interval_k = kNeverUpdate;
             } else {
               std::int64_t k = as_int("interval_k", v);
               if (k < 1) field_error("interval_k", "must be >= 1 or \"inf\"");
               c.interval_k = static_cast<std::uint64_t>(k);
             }
           }},
          {"buffer_capacity",
           [](SchedulerConfig& c, const ConfigValue& v) {
             c.buffer_capacity = as_positive_size("buffer_capacity", v);
           }},
          {"group_size",
           [](SchedulerConfig& c, const ConfigValue& v) {
             c.group_size = as_positive_size("group_size", v);
           }},
          {"batch_size",
           [](SchedulerConfig& c, const ConfigValue& v) {
             c.batch_size = as_positive_size("batch_size", v);
           }},
          {"kl_coef",
           [](SchedulerConfig& c, const ConfigValue& v) {
             c.kl_coef = as_real("kl_coef", v);
           }},
          {"clip_eps",
           [](SchedulerConfig& c, const ConfigValue& v) {
             c.clip_eps = as_real("clip_eps", v);
           }},
          {"policy_lr",
           [](SchedulerConfig& c, const ConfigValue& v) {
             c.policy_lr = as_real("policy_lr", v);
           }},
          {"weight_floor",
           [](SchedulerConfig& c, const ConfigValue& v) {
             c.weight_floor = as_real("weight_floor", v);
           }},
          {"kl_mode",
           [](SchedulerConfig& c, const ConfigValue& v) {
             std::string mode = as_string("kl_mode", v);
             if (mode == "estimator") {
               c.kl_mode = KlMode::kEstimator;
             } else if (mode == "exact") {
               c.kl_mode = KlMode::kExact;
             } else {
               field_error("kl_mode", "must be \"estimator\" or \"exact\"");
             }
           }},
          {"sample_by_weight",
           [](SchedulerConfig& c, const ConfigValue& v) {
             c.sample_by_weight = as_bool("sample_by_weight", v);
           }},
          {"seed",
           [](SchedulerConfig& c, const ConfigValue& v) {
             c.seed = as_uint("seed", v);
           }},
      };
  auto it = kSetters.find(key);
  if (it == kSetters.end()) {
    throw Error(ErrorCode::kUnknownKey, "unknown config key: " + key);
  }
  it->second(c, v);
}

std::vector<double> real_list(const std::string& field, const ConfigValue& v) {
  std::vector<double> out;
  for (const auto& e : as_array(field, v)) out.push_back(as_real(field, e));
  return out;
}

void apply_scenario_key(SchedulerConfig& c, const std::string& key,
                        const ConfigValue& v) {
  if (key == "name") {
    c.scenario = as_string("scenario.name", v);
  } else if (key == "token_sets") {
    std::vector<std::vector<int>> sets;
    for (const auto& row : as_array("scenario.token_sets", v)) {
      std::vector<int> set;
      for (const auto& t : as_array("scenario.token_sets", row)) {
        std::int64_t tok = as_int("scenario.token_sets", t);
        if (tok < 0) field_error("scenario.token_sets", "entries must be >= 0");
        set.push_back(static_cast<int>(tok));
      }
      sets.push_back(std::move(set));
    }
    c.scenario_overrides.token_sets = std::move(sets);
  } else if (key == "noise_scale") {
    std::vector<std::vector<double>> rows;
    for (const auto& row : as_array("scenario.noise_scale", v)) {
      rows.push_back(real_list("scenario.noise_scale", row));
    }
    c.scenario_overrides.noise_scale = std::move(rows);
  } else if (key == "difficulty") {
    c.scenario_overrides.difficulty = real_list("scenario.difficulty", v);
  } else {
    throw Error(ErrorCode::kUnknownKey, "unknown config key: scenario." + key);
  }
}

}  // namespace

ConfigDocument parse_config_text(std::string_view text) {
  ConfigDocument doc;
  doc[""];
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']' &&
        line.find('=') == std::string::npos) {
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty()) syntax_error(line_no, "empty section name");
      doc[section];
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) syntax_error(line_no, "expected key = value");
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) syntax_error(line_no, "empty key");
    for (char c : key) {
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
            c == '-')) {
        syntax_error(line_no, "invalid key: " + key);
      }
    }
    int start_line = line_no;
    // Arrays may span several lines.
    while (bracket_balance(value) > 0 && std::getline(in, raw)) {
      ++line_no;
      value += " " + trim(strip_comment(raw));
    }
    auto& table = doc[section];
    if (table.count(key)) syntax_error(start_line, "duplicate key: " + key);
    table[key] = ValueParser(value, start_line).parse();
  }
  return doc;
}

void check_config(const SchedulerConfig& c) {
  if (c.n_rewards && *c.n_rewards < 1) field_error("n_rewards", "must be >= 1");
  if (c.n_categories && *c.n_categories < 1) {
    field_error("n_categories", "must be >= 1");
  }
  if (!(c.alpha > 0.0 && c.alpha <= 1.0)) field_error("alpha", "must be in (0,1]");
  if (!(c.lcb_beta >= 0.0) || !std::isfinite(c.lcb_beta)) {
    field_error("lcb_beta", "must be >= 0");
  }
  if (!(c.eta > 0.0) || !std::isfinite(c.eta)) field_error("eta", "must be > 0");
  if (!(c.temperature_mu > 0.0) || !std::isfinite(c.temperature_mu)) {
    field_error("temperature_mu", "must be > 0");
  }
  if (c.interval_k < 1) field_error("interval_k", "must be >= 1");
  if (c.buffer_capacity < 1) field_error("buffer_capacity", "must be >= 1");
  if (c.group_size < 2) field_error("group_size", "must be >= 2");
  if (c.batch_size < 1) field_error("batch_size", "must be >= 1");
  if (!(c.kl_coef >= 0.0) || !std::isfinite(c.kl_coef)) {
    field_error("kl_coef", "must be >= 0");
  }
  if (!(c.clip_eps > 0.0) || !std::isfinite(c.clip_eps)) {
    field_error("clip_eps", "must be > 0");
  }
  if (!(c.policy_lr > 0.0) || !std::isfinite(c.policy_lr)) {
    field_error("policy_lr", "must be > 0");
  }
  if (!(c.weight_floor >= 0.0 && c.weight_floor < 1.0)) {
    field_error("weight_floor", "must be in [0,1)");
  }
  if (c.n_rewards &&
      c.weight_floor * static_cast<double>(*c.n_rewards) >= 1.0) {
    field_error("weight_floor", "must be < 1/n_rewards");
  }
}

SchedulerConfig validate_config(const ConfigDocument& raw) {
  SchedulerConfig config;
  for (const auto& [section, table] : raw) {
    if (section.empty() || section == "scheduler") {
      for (const auto& [key, value] : table) {
        apply_scheduler_key(config, key, value);
      }
    } else if (section == "scenario") {
      for (const auto& [key, value] : table) {
        apply_scenario_key(config, key, value);
      }
    } else {
      throw Error(ErrorCode::kUnknownKey, "unknown config section: " + section);
    }
  }
  check_config(config);
  return config;
}

SchedulerConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open config file: " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return validate_config(parse_config_text(buffer.str()));
}

}  // namespace spard
