#pragma once

#include <cmath>
#include <cstdint>

#include "tsslab/errors.hpp"

namespace tsslab {

// xoshiro256++ with splitmix64 seeding. We own the generator (rather than using
// <random> engines + distributions) because reruns must be byte-identical across
// compilers and standard libraries, and because replicate substreams need a
// documented derivation: stream r of master seed s is seeded from
// splitmix64(s ^ (r+1) * 0x9E3779B97F4A7C15).

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace detail

class RngStream {
public:
    explicit RngStream(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = detail::splitmix64(sm);
    }

    // Substream for one replicate: decorrelated from the master stream and from
    // every other replicate index.
    static RngStream substream(std::uint64_t master_seed, std::uint64_t replicate) {
        return RngStream(master_seed ^ ((replicate + 1) * 0x9E3779B97F4A7C15ULL));
    }

    std::uint64_t next_u64() {
        std::uint64_t* s = state_;
        const std::uint64_t result = detail::rotl(s[0] + s[3], 23) + s[0];
        const std::uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = detail::rotl(s[3], 45);
        return result;
    }

    // Uniform on [0,1) with 53 random bits: (x >> 11) * 2^-53.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // Exponential waiting time with the given rate; uses -log(1-u) so u = 0 is
    // safe and the result is strictly positive.
    double exponential(double rate) {
        if (!(rate > 0.0)) throw PreconditionError("exponential: rate must be positive");
        return -std::log1p(-uniform()) / rate;
    }

    // Standard normal via Box-Muller; caches the second variate.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        // avoid log(0)
        while (u1 == 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    // Index in [0, n) by rejection from the high bits (unbiased).
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n == 0) throw PreconditionError("uniform_index: n must be positive");
        const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
        for (;;) {
            const std::uint64_t x = next_u64();
            if (x >= threshold) return x % n;
        }
    }

private:
    std::uint64_t state_[4] = {};
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace tsslab
