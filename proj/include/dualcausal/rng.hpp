#pragma once

#include <cmath>
#include <cstdint>

namespace dcl {

// Deterministic 64-bit generator (splitmix64). Self-contained so streams are
// bit-identical across platforms and standard-library versions; the standard
// distributions are implementation-defined and would break that guarantee.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

    // Standard normal via Box-Muller; one value per call, no cached state.
    double normal() {
        double u1 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    // Derived per-worker stream: seed xor worker index.
    Rng fork(std::uint64_t worker_index) const { return Rng(state_ ^ worker_index); }

private:
    std::uint64_t state_;
};

} // namespace dcl
