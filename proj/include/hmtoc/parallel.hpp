#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace hmtoc {

// Runs f(i) for i in [0, n). Work items must be independent and write
// only to their own output slot; the merged result is then deterministic
// regardless of thread count.
template <typename F>
void parallel_for(std::size_t n, F&& f) {
    unsigned hw = std::thread::hardware_concurrency();
    std::size_t workers = hw == 0 ? 1 : hw;
    if (workers > n) workers = n == 0 ? 1 : n;
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) f(i);
        });
    }
    for (std::thread& t : threads) t.join();
}

}  // namespace hmtoc
