#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace p2ps::nn {

/// PCG32 generator (O'Neill's pcg32, XSH-RR variant). Chosen over
/// std::mt19937 + std::distributions because the standard leaves
/// distribution algorithms unspecified across library implementations;
/// this generator plus the explicit transforms below produce identical
/// streams on every platform. State is two 64-bit words, so stochastic
/// pipeline stages can be keyed statelessly by (seed, stream).
class Pcg32 {
public:
    Pcg32() : Pcg32(0, 0) {}

    Pcg32(std::uint64_t seed, std::uint64_t stream) {
        inc_ = (stream << 1u) | 1u;
        state_ = 0u;
        next_u32();
        state_ += seed;
        next_u32();
    }

    std::uint32_t next_u32() {
        std::uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        std::uint32_t xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
        std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
    }

    /// Uniform in [0, 1) with 32 bits of resolution.
    double next_double() { return next_u32() * (1.0 / 4294967296.0); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Unbiased integer in [0, bound) by rejection.
    std::uint32_t below(std::uint32_t bound) {
        if (bound <= 1) return 0;
        std::uint32_t threshold = (-bound) % bound;
        for (;;) {
            std::uint32_t r = next_u32();
            if (r >= threshold) return r % bound;
        }
    }

    bool bernoulli(double p) { return next_double() < p; }

    /// Standard normal via Box-Muller; consumes two draws per call.
    double normal() {
        double u1 = next_double();
        double u2 = next_double();
        if (u1 < 1e-12) u1 = 1e-12;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Fisher-Yates shuffle.
    template <typename V>
    void shuffle(std::vector<V>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = below(static_cast<std::uint32_t>(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_ = 0;
    std::uint64_t inc_ = 1;
};

/// Stream-id bases separating the independent random consumers of a run.
/// Every stochastic decision is a pure function of (seed, base + index),
/// which is what makes pause/resume and prefetch-parallel pipelines
/// reproduce serial execution exactly.
namespace rng_stream {
constexpr std::uint64_t kWeightInit = 1ULL << 32;
constexpr std::uint64_t kShuffle = 2ULL << 32;
constexpr std::uint64_t kAugment = 3ULL << 32;
constexpr std::uint64_t kDropout = 4ULL << 32;
constexpr std::uint64_t kSynth = 5ULL << 32;
constexpr std::uint64_t kSplit = 6ULL << 32;
}  // namespace rng_stream

}  // namespace p2ps::nn
