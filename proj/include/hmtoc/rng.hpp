#pragma once

// Counter-based deterministic random streams. Each draw is a pure
// function of (seed, stream, counter), so parallel consumers never share
// generator state and results are independent of execution order.

#include <cstdint>

namespace hmtoc {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct CounterRng {
    std::uint64_t key;

    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : key(splitmix64(seed ^ splitmix64(stream * 0x2545f4914f6cdd1dULL))) {}

    std::uint64_t bits(std::uint64_t counter) const {
        return splitmix64(key ^ splitmix64(counter + 0x632be59bd9b4e019ULL));
    }

    // Uniform in [0, 1).
    double unit(std::uint64_t counter) const {
        return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
    }

    // Uniform in (lo, hi].
    double open_closed(std::uint64_t counter, double lo, double hi) const {
        return lo + (hi - lo) * (1.0 - unit(counter));
    }
};

}  // namespace hmtoc
