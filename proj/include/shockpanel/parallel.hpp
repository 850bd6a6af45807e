#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace shockpanel {

/// Worker count: hardware concurrency capped by the SHOCKPANEL_THREADS
/// environment variable (values < 1 mean serial execution).
inline int worker_count() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* env = std::getenv("SHOCKPANEL_THREADS")) {
        char* end = nullptr;
        long cap = std::strtol(env, &end, 10);
        if (end != env && cap >= 1 && cap < n) n = static_cast<int>(cap);
    }
    return n;
}

/// Runs fn(i) for i in [0, count). Results must be written to preallocated
/// per-index slots so the outcome is identical for any thread count.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    int workers = worker_count();
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::size_t stride = static_cast<std::size_t>(workers);
    pool.reserve(stride);
    for (std::size_t w = 0; w < stride; ++w) {
        pool.emplace_back([&, w]() {
            for (std::size_t i = w; i < count; i += stride) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace shockpanel
