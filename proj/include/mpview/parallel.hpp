#pragma once

#include <omp.h>

#include <cstdlib>
#include <exception>
#include <string>
#include <vector>

namespace mpview {

// Worker count resolution: explicit value > MPVIEW_WORKERS env > OpenMP max.
inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("MPVIEW_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return omp_get_max_threads();
}

// Data-parallel loop over [0, n). workers <= 1 runs the plain serial loop;
// otherwise OpenMP with static schedule. Exceptions thrown by the body are
// captured inside the parallel region and rethrown once (the first one in
// index order wins, so failures are reproducible at any worker count).
template <typename Fn>
void parallel_for(long n, int workers, Fn&& fn) {
  if (n <= 0) return;
  workers = resolve_workers(workers);
  if (workers <= 1 || n == 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<size_t>(n));
  bool failed = false;
#pragma omp parallel for schedule(static) num_threads(workers)
  for (long i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
      errors[static_cast<size_t>(i)] = std::current_exception();
#pragma omp atomic write
      failed = true;
    }
  }
  if (failed) {
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
}

// Block decomposition for order-independent reductions. Work is split into
// fixed-size blocks; each block computes a partial result (possibly in
// parallel) and partials are combined serially in block order. Because the
// block layout depends only on (n, block_size), the result is bit-identical
// at every worker count.
struct BlockRange {
  long begin = 0;
  long end = 0;
};

inline std::vector<BlockRange> make_blocks(long n, long block_size) {
  std::vector<BlockRange> blocks;
  for (long b = 0; b < n; b += block_size)
    blocks.push_back({b, b + block_size < n ? b + block_size : n});
  return blocks;
}

// Evaluates block_fn(block_index, range) for every block, then combine(block_index)
// serially in ascending order. block_fn must write only block-local state.
template <typename BlockFn, typename CombineFn>
void blocked_reduce(long n, long block_size, int workers, BlockFn&& block_fn,
                    CombineFn&& combine) {
  const auto blocks = make_blocks(n, block_size);
  parallel_for(static_cast<long>(blocks.size()), workers,
               [&](long b) { block_fn(b, blocks[static_cast<size_t>(b)]); });
  for (size_t b = 0; b < blocks.size(); ++b) combine(static_cast<long>(b));
}

}  // namespace mpview
