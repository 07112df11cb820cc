#pragma once

#include <algorithm>
#include <cstddef>
#include <future>
#include <thread>
#include <vector>

namespace ddsde {

/// Number of worker threads used by parallel_for and the harness pools.
inline unsigned worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Calls body(i) for i in [0, count) split into contiguous chunks, one per
/// worker. body must not touch shared mutable state.
template <class Body>
void parallel_for(std::size_t count, Body body) {
    const std::size_t workers = std::min<std::size_t>(worker_count(), std::max<std::size_t>(count / 1024, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::future<void>> tasks;
    const std::size_t chunk = (count + workers - 1) / workers;
    for (std::size_t start = 0; start < count; start += chunk) {
        const std::size_t stop = std::min(count, start + chunk);
        tasks.push_back(std::async(std::launch::async, [&body, start, stop] {
            for (std::size_t i = start; i < stop; ++i) body(i);
        }));
    }
    for (auto& t : tasks) t.get();
}

} // namespace ddsde
