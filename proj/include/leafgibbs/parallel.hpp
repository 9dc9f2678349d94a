#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace leafgibbs {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Counter-based stream: the draws of stream k depend only on (seed, k), so
/// samples can be generated in any order or on any worker.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream) : key_(splitmix64(seed ^ splitmix64(stream + 0x632BE59BD9B4E019ull))) {}

    std::uint64_t next() { return splitmix64(key_ + 0x9E3779B97F4A7C15ull * ++counter_); }
    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

inline int resolve_workers(int workers) {
    if (workers > 0) return workers;
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

/// Evaluates f(i) for i in [0, n) on `workers` threads; results are stored by
/// index, so the output does not depend on the worker count. The first
/// exception thrown by any task is rethrown.
template <class F>
auto parallel_map(std::size_t n, int workers, F&& f) -> std::vector<decltype(f(std::size_t{}))> {
    using R = decltype(f(std::size_t{}));
    std::vector<R> out(n);
    const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(resolve_workers(workers)), std::max<std::size_t>(n, 1));
    if (w <= 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
        return out;
    }
    std::exception_ptr error;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < w; ++k) {
        pool.emplace_back([&, k] {
            try {
                for (std::size_t i = k; i < n; i += w) {
                    {
                        std::lock_guard lock(mu);
                        if (error) return;
                    }
                    out[i] = f(i);
                }
            } catch (...) {
                std::lock_guard lock(mu);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return out;
}

}  // namespace leafgibbs
