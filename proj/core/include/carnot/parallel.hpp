#pragma once

#include <cstddef>
#include <functional>

namespace carnot {

// Worker cap for data-parallel loops. Defaults to CARNOT_THREADS when set,
// otherwise to the OpenMP runtime default.
void set_max_threads(int n);
int max_threads();

// Calls body(begin, end) on disjoint chunks covering [0, n).
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t grain = 64);

} // namespace carnot
