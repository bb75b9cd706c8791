#pragma once

#include <atomic>
#include <cstddef>
#include <span>
#include <thread>
#include <vector>

namespace viana {

namespace detail {
inline std::atomic<int>& thread_override() {
    static std::atomic<int> n{0};
    return n;
}
}  // namespace detail

inline int default_threads() {
    int n = detail::thread_override().load(std::memory_order_relaxed);
    if (n > 0) return n;
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

inline void set_default_threads(int n) {
    detail::thread_override().store(n, std::memory_order_relaxed);
}

inline constexpr std::size_t kParallelBlock = 4096;

// Runs fn(begin, end) over fixed-size index blocks. The block boundaries do
// not depend on the thread count, so any worker-count produces the same set
// of calls; fn must write only to slots derived from its index range.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn, int threads = 0,
                  std::size_t block = kParallelBlock) {
    if (count == 0) return;
    int t = threads > 0 ? threads : default_threads();
    const std::size_t n_blocks = (count + block - 1) / block;
    if (t <= 1 || n_blocks <= 1) {
        for (std::size_t b = 0; b < n_blocks; ++b) {
            std::size_t lo = b * block;
            std::size_t hi = lo + block < count ? lo + block : count;
            fn(lo, hi);
        }
        return;
    }
    if (static_cast<std::size_t>(t) > n_blocks) t = static_cast<int>(n_blocks);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t b = next.fetch_add(1, std::memory_order_relaxed);
            if (b >= n_blocks) return;
            std::size_t lo = b * block;
            std::size_t hi = lo + block < count ? lo + block : count;
            fn(lo, hi);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(t) - 1);
    for (int i = 0; i < t - 1; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

// Like parallel_for but hands each worker a stable slot id in [0, slots),
// for integer accumulators whose merge is exact regardless of order.
template <class Fn>
int parallel_for_slotted(std::size_t count, int slots, Fn&& fn,
                         std::size_t block = kParallelBlock) {
    if (count == 0) return 0;
    int t = slots > 0 ? slots : default_threads();
    const std::size_t n_blocks = (count + block - 1) / block;
    if (static_cast<std::size_t>(t) > n_blocks) t = static_cast<int>(n_blocks);
    if (t < 1) t = 1;
    std::atomic<std::size_t> next{0};
    auto worker = [&](int slot) {
        for (;;) {
            std::size_t b = next.fetch_add(1, std::memory_order_relaxed);
            if (b >= n_blocks) return;
            std::size_t lo = b * block;
            std::size_t hi = lo + block < count ? lo + block : count;
            fn(slot, lo, hi);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(t) - 1);
    for (int i = 1; i < t; ++i) pool.emplace_back(worker, i);
    worker(0);
    for (auto& th : pool) th.join();
    return t;
}

// Fixed-order tree sum; the result is a function of the values alone.
inline double pairwise_sum(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

inline double pairwise_mean(std::span<const double> v) {
    return v.empty() ? 0.0 : pairwise_sum(v) / static_cast<double>(v.size());
}

}  // namespace viana
