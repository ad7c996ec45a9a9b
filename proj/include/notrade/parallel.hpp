#pragma once
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace notrade {

// Runs fn(first_path, last_path, worker_id) over [0, n) split into contiguous
// blocks. Workers write only to per-path slots, so results do not depend on
// the worker count; reductions happen after the join, in path order.
template <class Fn>
void parallel_for_blocks(std::size_t n, int threads, Fn&& fn) {
    std::size_t hw = threads > 0 ? static_cast<std::size_t>(threads)
                                 : std::max<std::size_t>(1, std::thread::hardware_concurrency());
    hw = std::min(hw, n == 0 ? std::size_t{1} : n);
    if (hw <= 1) {
        fn(std::size_t{0}, n, 0);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex err_mu;
    const std::size_t chunk = (n + hw - 1) / hw;
    for (std::size_t w = 0; w < hw; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi, w] {
            try {
                fn(lo, hi, static_cast<int>(w));
            } catch (...) {
                std::lock_guard<std::mutex> g(err_mu);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace notrade
