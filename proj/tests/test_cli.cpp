#include <cstdlib>
#include <sstream>

#include "doctest.h"
#include "spard/cli.hpp"
#include "spard/trajectory_io.hpp"
#include "test_util.hpp"

using namespace spard;
using spard::testing::TempDir;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "spard");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::size_t line_count(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

struct DeterministicEnv {
  DeterministicEnv() { ::setenv("SPARD_DETERMINISTIC", "1", 1); }
  ~DeterministicEnv() { ::unsetenv("SPARD_DETERMINISTIC"); }
};

}  // namespace

TEST_CASE("run writes one record per step, reproducibly") {
  DeterministicEnv env;
  TempDir dir;
  auto a = dir / "a.jsonl", b = dir / "b.jsonl";
  auto r = cli({"run", "--steps", "25", "--out", a.string(), "--seed", "3"});
  CHECK(r.code == 0);
  CHECK(cli({"run", "--steps", "25", "--out", b.string(), "--seed", "3"}).code == 0);
  const auto text = testing::read_file(a);
  CHECK(line_count(text) == 25);
  CHECK(text == testing::read_file(b));

  std::istringstream in(text);
  auto records = read_trajectory(in);
  REQUIRE(records.size() == 25);
  CHECK(records.back().step == 25);
  std::ostringstream again;
  write_trajectory(again, records);
  CHECK(again.str() == text);
}

TEST_CASE("run argument errors") {
  TempDir dir;
  CHECK(cli({"run", "--steps", "0", "--out", (dir / "x").string()}).code == kExitConfig);
  CHECK(cli({"run", "--steps", "-3", "--out", (dir / "x").string()}).code == kExitConfig);
  CHECK(cli({"run", "--out", (dir / "x").string()}).code == kExitConfig);
  CHECK(cli({"frobnicate"}).code == kExitConfig);
  CHECK(cli({"run", "--steps", "2", "--out", (dir / "x").string(), "--scenario", "nope"}).code ==
        kExitConfig);

  testing::write_file(dir / "bad.cfg", "alpha = 1.5\n");
  auto bad = cli({"run", "--steps", "2", "--out", (dir / "x").string(), "--config",
                  (dir / "bad.cfg").string()});
  CHECK(bad.code == kExitConfig);
  CHECK(bad.err.find("alpha must be in (0,1]") != std::string::npos);

  testing::write_file(dir / "typo.cfg", "alhpa = 0.5\n");
  CHECK(cli({"run", "--steps", "2", "--out", (dir / "x").string(), "--config",
             (dir / "typo.cfg").string()})
            .code == kExitConfig);

  CHECK(cli({"run", "--steps", "2", "--out", (dir / "missing" / "x.jsonl").string()}).code ==
        kExitIo);
  CHECK(cli({"run", "--steps", "2", "--out", (dir / "x").string(), "--config",
             (dir / "none.cfg").string()})
            .code == kExitIo);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("freeze flag keeps the weights uniform") {
  TempDir dir;
  auto path = dir / "f.jsonl";
  REQUIRE(cli({"run", "--steps", "40", "--out", path.string(), "--freeze-scheduler"}).code == 0);
  std::istringstream in(testing::read_file(path));
  for (const auto& r : read_trajectory(in)) {
    CHECK(r.reward_weights == std::vector<double>(4, 0.25));
    CHECK_FALSE(r.gain_vector.has_value());
  }
}

TEST_CASE("replay matches the run it was logged from") {
  DeterministicEnv env;
  TempDir dir;
  auto traj = dir / "t.jsonl", log = dir / "log.jsonl", rep = dir / "r.jsonl";
  REQUIRE(cli({"run", "--steps", "45", "--scenario", "symmetric", "--out", traj.string(),
               "--log", log.string()})
              .code == 0);
  CHECK(line_count(testing::read_file(log)) == 45 * 32);
  REQUIRE(cli({"replay", "--scenario", "symmetric", "--log", log.string(), "--out", rep.string()})
              .code == 0);
  std::istringstream a(testing::read_file(traj)), b(testing::read_file(rep));
  auto ta = read_trajectory(a), tb = read_trajectory(b);
  REQUIRE(ta.size() == tb.size());
  for (std::size_t t = 0; t < ta.size(); ++t) {
    CHECK(ta[t].reward_weights == tb[t].reward_weights);
    CHECK(ta[t].data_weights == tb[t].data_weights);
  }

  // Same log, wrong scenario shape.
  CHECK(cli({"replay", "--scenario", "staged", "--log", log.string(), "--out", rep.string()})
            .code == kExitConfig);
}

TEST_CASE("replay input errors") {
  TempDir dir;
  auto rep = (dir / "r.jsonl").string();
  testing::write_file(dir / "empty.jsonl", "");
  CHECK(cli({"replay", "--log", (dir / "empty.jsonl").string(), "--out", rep}).code ==
        kExitDataFormat);

  const std::string good =
      R"({"step":1,"category_id":0,"group_rewards":[[0.1,0.2,0.3,0.4],[0.5,0.5,0.5,0.5]]})";
  testing::write_file(dir / "broken.jsonl", good + "\n{\"step\":1,\n");
  auto broken = cli({"replay", "--log", (dir / "broken.jsonl").string(), "--out", rep});
  CHECK(broken.code == kExitDataFormat);
  CHECK(broken.err.find("line 2") != std::string::npos);

  testing::write_file(dir / "range.jsonl",
                      R"({"step":1,"category_id":0,"group_rewards":[[1.5,0,0,0],[0,0,0,0]]})"
                      "\n");
  CHECK(cli({"replay", "--log", (dir / "range.jsonl").string(), "--out", rep}).code ==
        kExitDataFormat);

  // Group size 2 against the default group_size 8.
  testing::write_file(dir / "short.jsonl", good + "\n");
  CHECK(cli({"replay", "--log", (dir / "short.jsonl").string(), "--out", rep}).code ==
        kExitConfig);

  CHECK(cli({"replay", "--log", (dir / "nope.jsonl").string(), "--out", rep}).code == kExitIo);
}

TEST_CASE("replay of identical rewards keeps data weights uniform") {
  TempDir dir;
  std::string log;
  const std::string group = "[[0.5,0.5,0.5,0.5],[0.5,0.5,0.5,0.5],[0.5,0.5,0.5,0.5],"
                            "[0.5,0.5,0.5,0.5],[0.5,0.5,0.5,0.5],[0.5,0.5,0.5,0.5],"
                            "[0.5,0.5,0.5,0.5],[0.5,0.5,0.5,0.5]]";
  for (int step = 1; step <= 40; ++step) {
    for (int c = 0; c < 4; ++c) {
      log += "{\"step\":" + std::to_string(step) + ",\"category_id\":" + std::to_string(c) +
             ",\"group_rewards\":" + group + "}\n";
    }
  }
  testing::write_file(dir / "flat.jsonl", log);
  auto out = dir / "r.jsonl";
  REQUIRE(cli({"replay", "--log", (dir / "flat.jsonl").string(), "--out", out.string()}).code == 0);
  std::istringstream in(testing::read_file(out));
  for (const auto& r : read_trajectory(in)) {
    for (double w : r.data_weights) CHECK(w == doctest::Approx(0.25).epsilon(1e-15));
  }
}

TEST_CASE("oracle-check") {
  auto a = cli({"oracle-check", "--trials", "50", "--seed", "4"});
  auto b = cli({"oracle-check", "--trials", "50", "--seed", "4"});
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.find("trials 50 max_linf_gap") == 0);
  CHECK(a.out.find("PASS") != std::string::npos);
  CHECK(cli({"oracle-check", "--trials", "0"}).code == kExitConfig);

  auto r = run_oracle_check(10, 1);
  CHECK(r.trials == 10);
  CHECK(r.zero_gain_gap < 1e-6);
}

TEST_CASE("export-csv") {
  TempDir dir;
  auto traj = dir / "t.jsonl", csv = dir / "t.csv";
  REQUIRE(cli({"run", "--steps", "22", "--scenario", "staged", "--out", traj.string()}).code == 0);
  REQUIRE(cli({"export-csv", "--in", traj.string(), "--out", csv.string()}).code == 0);
  const auto text = testing::read_file(csv);
  CHECK(line_count(text) == 23);
  CHECK(text.rfind("step,reward_weight_0,reward_weight_1,data_weight_0,data_weight_1,", 0) == 0);

  // Row 20 is the first weight update.
  std::istringstream lines(text);
  std::string line;
  for (int k = 0; k <= 20; ++k) std::getline(lines, line);
  CHECK(line.rfind("20,", 0) == 0);
  CHECK(line.back() == '1');

  testing::write_file(dir / "empty.jsonl", "");
  CHECK(cli({"export-csv", "--in", (dir / "empty.jsonl").string(), "--out", csv.string()}).code ==
        kExitDataFormat);
  testing::write_file(dir / "junk.jsonl", "not json\n");
  CHECK(cli({"export-csv", "--in", (dir / "junk.jsonl").string(), "--out", csv.string()}).code ==
        kExitDataFormat);
}
