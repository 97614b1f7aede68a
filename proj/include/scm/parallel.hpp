#pragma once

#include <cstddef>
#include <functional>

namespace scm {

/// Worker count from SCM_WORKERS, else the hardware concurrency (at least 1).
int worker_count();

/// Calls fn(i) for i in [0, n) on up to `workers` threads. Each index is
/// handled exactly once; the first exception thrown by any call is rethrown.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace scm
