#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "ham/errors.hpp"

namespace ham::par {

// Worker count resolution: an explicit request wins, then the HAMSIM_THREADS
// environment variable, then hardware concurrency.
inline int resolve_workers(int requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("HAMSIM_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1 || v > 4096) {
            throw ConfigError("HAMSIM_THREADS must be a positive integer");
        }
        return static_cast<int>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Run fn(i) for i in [0, count) on up to `workers` threads. Tasks are claimed
// through a shared counter, so callers must write results to per-index slots;
// then the outcome cannot depend on scheduling or on the worker count.
inline void parallel_for(std::int64_t count, int workers,
                         const std::function<void(std::int64_t)>& fn) {
    if (count <= 0) return;
    const int n_threads =
        static_cast<int>(std::min<std::int64_t>(std::max(workers, 1), count));
    if (n_threads <= 1) {
        for (std::int64_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto work = [&]() {
        while (true) {
            const std::int64_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int w = 0; w < n_threads; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace ham::par
