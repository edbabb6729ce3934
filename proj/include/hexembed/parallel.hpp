#pragma once

#include <cstddef>
#include <functional>

namespace hexembed {

/// Worker count: HEXEMBED_THREADS when set (>= 1), else hardware concurrency.
std::size_t thread_count();

/// Calls body(i) for i in [0, n) over contiguous chunks. Each index is
/// processed exactly once; callers keep results per index so the outcome does
/// not depend on the number of threads.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace hexembed
