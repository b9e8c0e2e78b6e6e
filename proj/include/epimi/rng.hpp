#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "epimi/errors.hpp"

namespace epimi {

// Deterministic, platform-independent stream of random variates.
//
// A stream is identified by (master_seed, stream_id).  Two streams with
// different ids are statistically independent for our purposes, and the same
// pair always reproduces the same sequence bit-for-bit.  All samplers below
// are implemented by hand on top of the raw 64-bit generator output instead
// of going through std::*_distribution, whose algorithms are unspecified and
// differ between standard libraries.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
        : master_seed_(master_seed), stream_id_(stream_id) {
        // Decorrelate nearby (seed, id) pairs before seeding the engine.
        const std::uint64_t a = splitmix64(master_seed ^ 0x9e3779b97f4a7c15ull);
        const std::uint64_t b = splitmix64(a ^ stream_id);
        const std::uint64_t c = splitmix64(b);
        const std::uint64_t d = splitmix64(c);
        std::seed_seq seq{
            static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
            static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
            static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
            static_cast<std::uint32_t>(d), static_cast<std::uint32_t>(d >> 32)};
        engine_.seed(seq);
    }

    std::uint64_t master_seed() const { return master_seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53 random mantissa bits.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n).  Rejection sampling keeps it unbiased.
    std::uint64_t uniform_below(std::uint64_t n) {
        if (n == 0) throw ValidationError("uniform_below: n must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t draw;
        do {
            draw = engine_();
        } while (draw >= limit);
        return draw % n;
    }

    // Standard normal via Box-Muller.  No cached second variate: each call
    // consumes exactly two uniforms, which keeps stream consumption easy to
    // reason about when auditing reproducibility.
    double normal() {
        double u1 = uniform01();
        while (u1 == 0.0) u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return r * std::cos(2.0 * M_PI * u2);
    }

    // Exponential with rate 1.
    double exponential() { return -std::log1p(-uniform01()); }

private:
    static std::uint64_t splitmix64(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    std::uint64_t master_seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
};

// Stream-id layout shared by the resampling machinery.  Bootstrap replicate b
// draws its weights from stream b, training run s draws its initialisation
// and shuffling noise from stream kTrainingSeedBase + s, and a failed
// replicate retries on the same layout shifted by kRetryBase.
inline constexpr std::uint64_t kTrainingSeedBase = 1ull << 32;
inline constexpr std::uint64_t kRetryBase = 1ull << 34;

// Collapses (seed, tag) into a fresh 64-bit master seed for a sub-component,
// so that e.g. the MCMC chain and the bootstrap ensemble of one CLI run
// consume unrelated streams.
inline std::uint64_t derive_submaster(std::uint64_t seed, std::uint64_t tag) {
    return RngStream(seed, tag).next_u64();
}

}  // namespace epimi
