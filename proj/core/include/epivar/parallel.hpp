#pragma once

#include <cstddef>
#include <functional>

namespace epivar {

/// Runs fn(0..count-1) on up to `workers` threads. Tasks must write only to
/// their own index; the first exception thrown by any task is rethrown on
/// the calling thread after all workers join. workers <= 1 runs inline.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn,
                  int workers);

/// Worker count from the EPIVAR_WORKERS environment variable, falling back
/// to std::thread::hardware_concurrency().
int default_worker_count();

}  // namespace epivar
