#include "rodd/random.hpp"

#include <cmath>

namespace rodd {

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) {
        throw ValidationError("Rng::below requires n > 0");
    }
    // Masked rejection: uniform and deterministic for any engine stream.
    std::uint64_t mask = n - 1;
    mask |= mask >> 1;
    mask |= mask >> 2;
    mask |= mask >> 4;
    mask |= mask >> 8;
    mask |= mask >> 16;
    mask |= mask >> 32;
    for (;;) {
        const std::uint64_t r = engine_() & mask;
        if (r < n) {
            return r;
        }
    }
}

double Rng::normal(double mean, double stddev) {
    if (has_spare_) {
        has_spare_ = false;
        return mean + stddev * spare_;
    }
    // Box-Muller on two fresh uniforms; u is kept away from 0 for the log.
    double u = 0.0;
    do {
        u = uniform01();
    } while (u <= 0.0);
    const double v = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u));
    const double angle = 2.0 * M_PI * v;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return mean + stddev * radius * std::cos(angle);
}

double Rng::truncated_normal(double mean, double stddev, double lo, double hi) {
    if (!(stddev > 0.0)) {
        throw ValidationError("truncated normal requires stddev > 0");
    }
    if (!(lo <= hi)) {
        throw ValidationError("truncated normal requires lo <= hi");
    }
    for (int attempt = 0; attempt < 100000; ++attempt) {
        const double x = normal(mean, stddev);
        if (x >= lo && x <= hi) {
            return x;
        }
    }
    throw ValidationError("truncated normal: interval carries too little probability mass");
}

}  // namespace rodd
