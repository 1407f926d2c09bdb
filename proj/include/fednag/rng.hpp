#pragma once

#include <cmath>
#include <cstdint>

namespace fednag {

// Counter-based deterministic RNG. Keeps runs byte-reproducible across
// platforms, unlike the implementation-defined std:: distributions.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n) without modulo bias (n > 0).
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t threshold = (0ULL - n) % n;
        for (;;) {
            std::uint64_t r = next();
            if (r >= threshold) return r % n;
        }
    }

    /// Standard normal via Box-Muller.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }
};

/// Mixes (seed, stream, step) into one RNG key; used to derive per-worker
/// per-iteration mini-batch sequences.
inline std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream, std::uint64_t step) {
    SplitMix64 a(seed);
    SplitMix64 b(a.next() ^ (stream + 0x632be59bd9b4e019ULL));
    SplitMix64 c(b.next() ^ (step + 0x9e3779b97f4a7c15ULL));
    return c.next();
}

}  // namespace fednag
