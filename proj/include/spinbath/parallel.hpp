// parallel.hpp: index-space worker pool
#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace spinbath {

// Calls body(i) for every i in [0, n) on up to `threads` workers. Indices are claimed from a
// shared counter; callers write results into slot i so output order never depends on scheduling.
// The first exception thrown by any body is rethrown after all workers stop.
template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n || failed.load(std::memory_order_relaxed)) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);
}

inline unsigned default_threads() {
    return std::max(1u, std::thread::hardware_concurrency());
}

} // namespace spinbath
