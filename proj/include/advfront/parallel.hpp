#pragma once

#include <cstddef>
#include <functional>

namespace advfront {

/// Worker count from ADVFRONT_WORKERS (default 1, clamped to [1, 256]).
int worker_count();

/// Runs body(i) for i in [0, n) over `workers` threads with static contiguous
/// chunks. Callers write results by index, so output never depends on the
/// worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  int workers = worker_count());

}  // namespace advfront
