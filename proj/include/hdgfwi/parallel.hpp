#pragma once

#include <cstddef>
#include <functional>

namespace hdgfwi {

/// Worker count from HDGFWI_NUM_THREADS, else the hardware concurrency.
int worker_count();

/// Runs body(i) for i in [0, n) on the worker pool. Each index is visited
/// exactly once; callers write results into per-index slots so the outcome
/// does not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace hdgfwi
