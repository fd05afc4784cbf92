#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <random>
#include <span>
#include <thread>
#include <vector>

namespace capsep {

/// Index of undirected edge (i,j), i<j, in the row-major upper triangle of
/// an n-vertex complete graph. Edges are ordered (0,1),(0,2),...,(n-2,n-1).
struct EdgeIndexer {
    int n = 0;

    EdgeIndexer() = default;
    explicit EdgeIndexer(int n_vertices) : n(n_vertices) {}

    int count() const { return n * (n - 1) / 2; }

    int operator()(int i, int j) const {
        if (i > j) std::swap(i, j);
        return i * (2 * n - i - 1) / 2 + (j - i - 1);
    }

    std::pair<int, int> endpoints(int e) const {
        int i = 0;
        int row = n - 1;
        while (e >= row) {
            e -= row;
            --row;
            ++i;
        }
        return {i, i + 1 + e};
    }
};

/// Pairwise (cascade) summation. Order-stable to ~1e-15 relative under
/// permutations, which the aggregation invariants rely on.
inline double pairwise_sum(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n == 0) return 0.0;
    if (n <= 4) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(xs.subspan(0, half)) + pairwise_sum(xs.subspan(half));
}

/// TSPLIB-style nearest-integer rounding (half rounds up for nonnegative x).
inline double nint(double x) { return std::floor(x + 0.5); }

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Run fn(i) for i in [0, count) across a fixed number of worker threads.
/// Work items must be independent; results should be written to
/// pre-allocated slots so the output order stays deterministic. The first
/// exception thrown by any item is rethrown on the calling thread.
inline void parallel_for(int count, const std::function<void(int)>& fn,
                         unsigned threads = std::thread::hardware_concurrency()) {
    if (threads <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    unsigned workers = std::min<unsigned>(threads, static_cast<unsigned>(count));
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            try {
                for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace capsep
