#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace chambercut {

/// Run fn(0..count-1) on up to `threads` workers. Work items must be
/// independent; the first exception is rethrown after all workers join.
/// Results must be written to pre-sized slots so output is schedule-free.
inline void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
    if (count <= 0) return;
    if (threads <= 1 || count == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    threads = std::min(threads, count);
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::mutex err_mx;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&]() {
            while (true) {
                int i = next.fetch_add(1);
                if (i >= count) break;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mx);
                    if (!err) err = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

inline int default_threads() {
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

} // namespace chambercut
