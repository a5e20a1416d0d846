#pragma once

#include <cstdint>
#include <limits>
#include <span>

namespace aml {

/// SplitMix64 step (Steele, Lea & Flood). Used to expand seeds and derive
/// independent sub-streams; never used as the main generator.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic seed for sub-stream `stream` of `base`.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
    std::uint64_t s = base;
    std::uint64_t a = splitmix64(s);
    std::uint64_t t = stream ^ a;
    return splitmix64(t);
}

/// xoshiro256** 1.0 (Blackman & Vigna), seeded through SplitMix64.
///
/// Every stochastic step in the pipeline draws from this generator so that a
/// seed replays byte-identically on any platform. Distribution helpers are
/// implemented here rather than taken from <random>, whose distributions are
/// implementation-defined.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) noexcept {
        std::uint64_t s = seed;
        for (auto& word : state_) word = splitmix64(s);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return next(); }

    std::uint64_t next() noexcept {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound). Lemire's multiply-shift with rejection.
    std::uint64_t below(std::uint64_t bound) noexcept;

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal() noexcept;

    /// Index drawn from an inclusive cumulative weight table (last entry = total).
    std::size_t pick(std::span<const double> cumulative) noexcept;

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4]{};
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

}  // namespace aml
