#include <benchmark/benchmark.h>

#include <random>

#include "spard/radr.hpp"
#include "spard/rlcore.hpp"

using namespace spard;

namespace {

struct BatchFixture {
  ToyPolicy policy = ToyPolicy::uniform(8, 64, 32);
  std::vector<GroupRollout> rollouts;
  SimplexWeights weights = SimplexWeights::uniform(8);

  explicit BatchFixture(std::size_t batch) {
    std::mt19937_64 gen(1);
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix logits(8, 64);
    for (auto& v : logits.data) v = n(gen);
    policy = ToyPolicy(logits, 32);
    for (std::size_t b = 0; b < batch; ++b) {
      Rng rng(b);
      auto r = sample_group(ToyPolicy::uniform(8, 64, 32), b % 8, 8, rng);
      std::vector<double> s(8);
      for (auto& x : s) x = rng.uniform();
      r.advantages = group_advantages(s);
      rollouts.push_back(std::move(r));
    }
  }
};

void run_batch_loss(benchmark::State& state, ExecutionOptions exec) {
  BatchFixture f(static_cast<std::size_t>(state.range(0)));
  const ToyPolicy ref = ToyPolicy::uniform(8, 64, 32);
  for (auto _ : state) {
    auto out = batch_grpo_loss(f.rollouts, f.policy, ref, GrpoOptions{}, f.weights, exec);
    benchmark::DoNotOptimize(out.report.total);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BatchLossSerial(benchmark::State& s) { run_batch_loss(s, {Execution::kSerial, ReductionOrder::kFixed}); }
void BM_BatchLossParallelFixed(benchmark::State& s) { run_batch_loss(s, {Execution::kParallel, ReductionOrder::kFixed}); }
void BM_BatchLossParallelUnordered(benchmark::State& s) { run_batch_loss(s, {Execution::kParallel, ReductionOrder::kUnordered}); }

std::vector<CategoryBuffer> make_buffers(std::size_t m) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<CategoryBuffer> buffers;
  for (std::size_t j = 0; j < m; ++j) {
    buffers.emplace_back(j, 64);
    for (int k = 0; k < 64; ++k) {
      GroupRewards g;
      for (int i = 0; i < 8; ++i) {
        std::vector<double> r(8);
        for (auto& x : r) x = u(gen);
        g.emplace_back(std::move(r));
      }
      buffers[j].push(std::move(g));
    }
  }
  return buffers;
}

void run_attribution(benchmark::State& state, Execution exec) {
  auto buffers = make_buffers(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto a = compute_attribution(buffers, std::nullopt, 8, 0.1, exec);
    benchmark::DoNotOptimize(a.raw.data.data());
  }
}

void BM_AttributionSerial(benchmark::State& s) { run_attribution(s, Execution::kSerial); }
void BM_AttributionParallel(benchmark::State& s) { run_attribution(s, Execution::kParallel); }

}  // namespace

BENCHMARK(BM_BatchLossSerial)->Arg(32)->Arg(256);
BENCHMARK(BM_BatchLossParallelFixed)->Arg(32)->Arg(256);
BENCHMARK(BM_BatchLossParallelUnordered)->Arg(32)->Arg(256);
BENCHMARK(BM_AttributionSerial)->Arg(8)->Arg(64);
BENCHMARK(BM_AttributionParallel)->Arg(8)->Arg(64);

BENCHMARK_MAIN();
