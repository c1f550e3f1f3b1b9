#pragma once

#include <cstddef>
#include <functional>

namespace stnhcl::numeric {

// Worker cap: STNHCL_THREADS if set and positive, else hardware concurrency.
std::size_t max_threads();

// Runs body(begin, end) over disjoint chunks of [0, n). Chunks never share
// output rows, so results do not depend on the thread count.
void parallel_for(std::size_t n, std::size_t min_chunk,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace stnhcl::numeric
