#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

namespace lampe {

/// Worker cap: min(hardware_concurrency, LAMPE_THREADS if set), at least 1.
int max_threads();

/// Runs f(begin, end) over chunks of [0, n). Work is claimed dynamically, so
/// triangular row costs stay balanced; callers must only write disjoint
/// state per index, which keeps results independent of the schedule.
/// serial_below: skip thread spawn entirely under this index count; tune it
/// to the per-index work (spawning costs ~100us).
template <typename F>
void parallel_for(std::int64_t n, F&& f, std::int64_t serial_below = 128) {
    const int threads = max_threads();
    if (n <= 0) return;
    if (threads <= 1 || n < serial_below) {
        f(std::int64_t{0}, n);
        return;
    }
    const std::int64_t chunk = std::max<std::int64_t>(1, n / (threads * 8));
    std::atomic<std::int64_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::int64_t begin = next.fetch_add(chunk, std::memory_order_relaxed);
            if (begin >= n) break;
            f(begin, std::min(n, begin + chunk));
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads - 1);
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

}  // namespace lampe
