// Execution knobs for the data-parallel kernels. Every kernel has a serial
// reference path kept for testing; the OpenMP path must agree with it
// exactly under ReductionOrder::kFixed.

#ifndef SPARD_PARALLEL_HPP_
#define SPARD_PARALLEL_HPP_

namespace spard {

enum class Execution { kSerial, kParallel };

// kFixed sums per-item partial results in item order, so results do not
// depend on the thread count. kUnordered merges thread-local partials as
// threads finish.
enum class ReductionOrder { kFixed, kUnordered };

struct ExecutionOptions {
  Execution execution = Execution::kParallel;
  ReductionOrder reduction = ReductionOrder::kFixed;
};

// kFixed when SPARD_DETERMINISTIC=1 is set, kUnordered otherwise.
ReductionOrder reduction_order_from_env();

}  // namespace spard

#endif  // SPARD_PARALLEL_HPP_
