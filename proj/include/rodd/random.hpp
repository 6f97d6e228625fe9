#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "rodd/errors.hpp"

namespace rodd {

// mt19937_64 with hand-rolled distributions. The standard library's
// distribution objects are implementation-defined, which would make seeded
// outputs differ between toolchains; everything here is specified bit-exactly
// by the engine's output stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi). lo itself is reachable, hi is not.
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
    std::uint64_t below(std::uint64_t n);

    // Box-Muller. The spare variate is cached, so interleaving with other
    // draws stays deterministic for a fixed call sequence.
    double normal(double mean, double stddev);

    // Rejection-sampled truncation to [lo, hi].
    double truncated_normal(double mean, double stddev, double lo, double hi);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Fisher-Yates with Rng::below; deterministic for a fixed seed everywhere.
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::swap(items[i - 1], items[rng.below(i)]);
    }
}

}  // namespace rodd
