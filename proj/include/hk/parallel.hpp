#pragma once

// Deterministic work-unit scheduler. Units are indexed 0..n-1; each unit's
// randomness comes from Rng::stream(seed, unit) inside the body, and outputs
// are written to unit-indexed slots, so the merged result is byte-identical
// for any worker count.

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hk {

template <class Fn>
void for_units(std::size_t n_units, int workers, Fn&& fn) {
    if (workers <= 1 || n_units <= 1) {
        for (std::size_t i = 0; i < n_units; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto body = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n_units) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    int nt = std::min<std::size_t>(std::size_t(workers), n_units);
    pool.reserve(nt);
    for (int t = 0; t < nt; ++t) pool.emplace_back(body);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace hk
