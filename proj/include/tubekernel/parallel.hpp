#pragma once

#include <cstddef>
#include <functional>

namespace tubekernel {

// Worker cap: TUBEKERNEL_THREADS if set (>= 1), else the hardware count.
std::size_t worker_count();

// Calls fn(i) for i in [0, n). Runs inline when called from inside another
// parallel_for or when only one worker is available. If several calls throw,
// the exception of the smallest index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace tubekernel
