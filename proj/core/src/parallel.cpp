#include "carnot/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>

#ifdef CARNOT_HAVE_OPENMP
#include <omp.h>
#endif

namespace carnot {

namespace {

int default_threads()
{
    if (const char* env = std::getenv("CARNOT_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0)
            return n;
    }
#ifdef CARNOT_HAVE_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

std::atomic<int>& thread_cap()
{
    static std::atomic<int> cap{default_threads()};
    return cap;
}

} // namespace

void set_max_threads(int n) { thread_cap() = std::max(1, n); }

int max_threads() { return thread_cap(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body, std::size_t grain)
{
    if (n == 0)
        return;
    grain = std::max<std::size_t>(1, grain);
    const int threads = max_threads();
    if (threads <= 1 || n <= grain) {
        body(0, n);
        return;
    }
    const std::size_t chunks = (n + grain - 1) / grain;
#ifdef CARNOT_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t begin = c * grain;
        body(begin, std::min(n, begin + grain));
    }
#else
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t begin = c * grain;
        body(begin, std::min(n, begin + grain));
    }
#endif
}

} // namespace carnot
