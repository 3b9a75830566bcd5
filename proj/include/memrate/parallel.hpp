#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace memrate {

// Run fn(i) for i in [0, n) on up to `threads` workers. Each index is handled
// by exactly one worker, so per-index outputs are deterministic regardless of
// the thread count; callers merge results in index order.
inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    auto worker = [&] {
        for (;;) {
            int i = next.fetch_add(1);
            if (i >= n) return;
            fn(i);
        }
    };
    int nw = std::min(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nw) - 1);
    for (int t = 1; t < nw; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

int default_threads();

}  // namespace memrate
