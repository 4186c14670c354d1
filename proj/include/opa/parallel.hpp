#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace opa {

// Process-wide worker cap; 0 means hardware concurrency. Set once at
// startup (CLI flag) before any parallel work.
inline std::atomic<int>& thread_limit_ref() {
    static std::atomic<int> limit{0};
    return limit;
}

inline void set_thread_limit(int n) { thread_limit_ref().store(n); }

inline int worker_count() {
    const int limit = thread_limit_ref().load();
    if (limit > 0) return limit;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs body(i) for i in [0, n). Work is handed out in dynamic chunks;
// every index is computed exactly once, so results do not depend on the
// schedule. The first exception thrown by any worker is rethrown on the
// calling thread.
template <class F>
void parallel_for(std::size_t n, F&& body) {
    const int workers = std::min<std::size_t>(worker_count(), n) > 0
                            ? static_cast<int>(std::min<std::size_t>(worker_count(), n))
                            : 1;
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    const std::size_t chunk = std::max<std::size_t>(1, n / (std::size_t(workers) * 8));
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        try {
            while (!failed.load(std::memory_order_relaxed)) {
                const std::size_t begin = next.fetch_add(chunk);
                if (begin >= n) return;
                const std::size_t end = std::min(n, begin + chunk);
                for (std::size_t i = begin; i < end; ++i) body(i);
            }
        } catch (...) {
            const std::lock_guard<std::mutex> lock(error_mutex);
            if (!failed.exchange(true)) error = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(workers) - 1);
    for (int t = 1; t < workers; ++t) pool.emplace_back(run);
    run();
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace opa
