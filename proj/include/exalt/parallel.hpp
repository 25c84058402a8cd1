#ifndef EXALT_PARALLEL_HPP
#define EXALT_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace exalt {

// Worker cap shared by all parallel loops. 0 means hardware concurrency.
// Results never depend on this value: tasks write disjoint slots and any
// reduction happens sequentially by index afterwards.
inline std::size_t& thread_cap_storage() {
    static std::size_t cap = 0;
    return cap;
}

inline void set_thread_cap(std::size_t cap) { thread_cap_storage() = cap; }

inline std::size_t effective_threads(std::size_t jobs) {
    std::size_t cap = thread_cap_storage();
    std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    if (cap == 0 || cap > hw) cap = hw;
    return std::max<std::size_t>(1, std::min(cap, jobs));
}

// Run fn(i) for i in [0, n) across worker threads, blocks of contiguous
// indices per worker. fn must only touch state owned by index i.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    if (n == 0) return;
    std::size_t workers = effective_threads(n);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        std::size_t lo = w * chunk;
        std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace exalt

#endif // EXALT_PARALLEL_HPP
