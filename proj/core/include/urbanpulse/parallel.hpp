#pragma once

#include <cstddef>
#include <functional>

namespace urbanpulse {

// Worker count: URBANPULSE_THREADS when set (>= 1), else the hardware
// concurrency.
std::size_t worker_count();

// Calls fn(i) for i in [0, n) on up to worker_count() threads. Results must
// be written to per-index slots so output does not depend on scheduling.
// The first exception thrown by any call is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace urbanpulse
