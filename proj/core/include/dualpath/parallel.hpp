#pragma once

#include <cstddef>
#include <functional>

namespace dualpath {

// Worker count from DPN_THREADS (default 1).
std::size_t thread_count();

// Calls fn(i) for every i in [0, n), split into contiguous blocks across up
// to `threads` workers. Callers write results into per-index slots so the
// outcome does not depend on scheduling. The first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, std::size_t threads = thread_count());

}  // namespace dualpath
