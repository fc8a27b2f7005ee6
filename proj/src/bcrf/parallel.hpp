#pragma once

#include <cstdint>
#include <functional>

namespace bcrf {

int hardware_threads();

// Runs fn(begin, end) over a deterministic chunking of [0, count). Work units
// must be independent (disjoint writes); results do not depend on which
// worker runs which chunk. threads <= 1 runs inline on the caller.
void parallel_for(int64_t count, int threads,
                  const std::function<void(int64_t, int64_t)>& fn);

}  // namespace bcrf
