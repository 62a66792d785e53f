#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace splatsim {

// Execution policy for the engine. Deterministic mode runs every stage
// serially in fixed particle-index order; parallel mode may only change
// floating-point summation order (see engine.hpp scatter scheme).
struct ExecPolicy {
    bool deterministic = true;
    int threads = 1;

    static ExecPolicy serial() { return {true, 1}; }
    static ExecPolicy parallel(int n) {
        if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
        if (n <= 0) n = 1;
        return {false, n};
    }

    int effective_threads() const { return deterministic ? 1 : std::max(1, threads); }
};

// Static range partition over [0, n). fn(begin, end) runs on each chunk.
template <typename Fn>
void parallel_for_chunks(std::size_t n, int threads, Fn&& fn) {
    if (n == 0) return;
    if (threads <= 1 || n == 1) {
        fn(std::size_t{0}, n);
        return;
    }
    const std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    const std::size_t chunk = (n + nt - 1) / nt;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (std::size_t t = 0; t < nt; ++t) {
        const std::size_t b = t * chunk;
        const std::size_t e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&, b, e] {
            try {
                fn(b, e);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

template <typename Fn>
void parallel_for_each(std::size_t n, int threads, Fn&& fn) {
    parallel_for_chunks(n, threads, [&fn](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) fn(i);
    });
}

} // namespace splatsim
