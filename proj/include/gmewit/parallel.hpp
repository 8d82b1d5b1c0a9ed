#pragma once

#include <cstddef>
#include <functional>

namespace gmewit {

// Worker count from GMEWIT_THREADS; falls back to the hardware concurrency.
int worker_count();

// Runs fn(0..count-1) across workers.  Callers write to per-index slots, so
// results never depend on scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace gmewit
