#pragma once

#include <cstddef>
#include <functional>

namespace histmap {

/// Worker count: hardware concurrency capped by the HISTMAP_THREADS
/// environment variable when set. Always at least 1.
int max_threads();

/// Runs fn(i) for every i in [0, count). Tasks must only write their own
/// output slots; results are then independent of the schedule, so runs are
/// byte-identical at any thread count.
void parallel_for(std::size_t count,
                  const std::function<void(std::size_t)>& fn);

}  // namespace histmap
