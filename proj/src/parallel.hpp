#pragma once

#include <cstddef>
#include <functional>

namespace fdx {

// Process-wide cap on worker threads. 0 means "use the hardware count".
void set_thread_cap(int n);
int effective_threads();

// Runs fn(i) for every i in [0, n) across worker threads. Each call must
// write only to its own preallocated output slot; with that discipline the
// result is identical for any thread count. The first exception thrown by a
// worker is rethrown to the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace fdx
