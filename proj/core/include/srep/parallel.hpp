#pragma once

#include <srep/common.hpp>

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace srep {

// Run fn(0), ..., fn(count - 1) on up to `jobs` threads. Work items must
// write only to their own output slots; with that discipline results are
// schedule independent. The first exception thrown by a worker is rethrown
// after all workers finish.
inline void parallel_for(Index jobs, Index count, const std::function<void(Index)>& fn) {
    require(jobs >= 1, "parallel_for: jobs must be >= 1");
    if (jobs == 1 || count <= 1) {
        for (Index i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<Index> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            const Index i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    const Index n_threads = std::min(jobs, count);
    threads.reserve(static_cast<std::size_t>(n_threads));
    for (Index t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace srep
