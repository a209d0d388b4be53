#pragma once

#include <cstddef>
#include <functional>

namespace ddrecon {

/// Worker cap: DDRECON_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs fn(i) for i in [0, n) on up to worker_count() threads. Each index is
/// processed exactly once; callers write results by index so the outcome does
/// not depend on scheduling. The first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace ddrecon
