#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace plemc {

// Project-pinned generator: xoshiro256++ with SplitMix64 stream derivation.
// Std distributions are implementation-defined, so all transforms (uniform,
// normal, Poisson) are spelled out here; a (seed, stream) pair fully
// determines the draw sequence on every platform.
class Rng {
public:
    Rng() : Rng(0, 0) {}

    Rng(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t s = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
        for (auto& w : state_) w = splitmix64(s);
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
    }

    static Rng for_stream(std::uint64_t seed, std::uint64_t stream) { return Rng(seed, stream); }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n); n must be nonzero.
    std::uint64_t uniform_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    /// Standard normal via Box-Muller (cosine branch, sine partner discarded);
    /// consumes exactly two uniforms per call.
    double normal() {
        const double u1 = 1.0 - uniform01(); // (0, 1]
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    /// Poisson draw by Knuth's product method; large means are split in two
    /// to keep exp(-lambda) in range.
    std::uint64_t poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        if (lambda > 60.0) return poisson(0.5 * lambda) + poisson(0.5 * lambda);
        const double limit = std::exp(-lambda);
        std::uint64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform01();
        } while (p > limit);
        return k - 1;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static std::uint64_t splitmix64(std::uint64_t& s) {
        s += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = s;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_[4];
};

} // namespace plemc
