#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace curvflow {

// Worker cap: CURVFLOW_THREADS (if >= 1) else hardware concurrency.
inline int max_threads() {
    static const int cached = [] {
        if (const char* env = std::getenv("CURVFLOW_THREADS")) {
            const int v = std::atoi(env);
            if (v >= 1) return v;
        }
        const unsigned hc = std::thread::hardware_concurrency();
        return hc == 0 ? 1 : static_cast<int>(hc);
    }();
    return cached;
}

// Runs fn(first, last) over a partition of [0, n).  Callers must make each
// item independent (per-index RNG streams) and merge with order-insensitive
// reductions so the result does not depend on the partition.
template <class Fn>
void parallel_chunks(long n, Fn&& fn) {
    if (n <= 0) return;
    const int workers = std::min<long>(max_threads(), n);
    if (workers <= 1) {
        fn(0L, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const long chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const long first = w * chunk;
        const long last = std::min(n, first + chunk);
        if (first >= last) break;
        pool.emplace_back([first, last, &fn] { fn(first, last); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace curvflow
