#pragma once

#include <cstddef>
#include <functional>

namespace fkent {

// Number of workers used by parallel_for. Resolution order: the value set by
// set_worker_count (if nonzero), then the FKENT_THREADS environment variable,
// then std::thread::hardware_concurrency().
std::size_t worker_count();

// Overrides the worker count for the process; 0 restores the default lookup.
void set_worker_count(std::size_t workers);

// Runs body(i) for every i in [0, count). Indices are handed out dynamically,
// so body must write its result into a slot keyed by i; callers then reduce
// in index order. Nested calls run serially on the calling worker.
// The first exception thrown by any body is rethrown after all workers join.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace fkent
