#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dlmf {

//! Runs fn(i) for i in [0, count) across up to `threads` workers pulling
//! indices from a shared counter. Every index writes only its own output
//! slot, so results are identical regardless of scheduling; callers must
//! keep any randomness keyed by index, not by worker.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(threads, count);
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
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
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

} // namespace dlmf
