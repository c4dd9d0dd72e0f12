#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace fhirqa {

/// Runs fn(i) for i in [0, n) on up to `limit` threads. Each index runs exactly
/// once; the first exception (lowest index) is rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t limit, Fn&& fn) {
    const std::size_t workers = std::max<std::size_t>(1, std::min(limit, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::mutex err_mu;
    std::exception_ptr first_error;
    std::size_t first_error_index = n;

    auto work = [&] {
        while (!stop.load(std::memory_order_relaxed)) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(err_mu);
                if (i < first_error_index) {
                    first_error_index = i;
                    first_error = std::current_exception();
                }
                stop = true;
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    pool.clear();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace fhirqa
