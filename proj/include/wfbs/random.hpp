#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

#include <boost/random/normal_distribution.hpp>

namespace wfbs {

/// SplitMix64 step; used for seeding and for deriving independent substream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Seed for substream `index` of `master`. Pure function of its arguments, so
/// replication i always receives the same stream regardless of scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
    std::uint64_t state = master ^ 0x6A09E667F3BCC909ull;
    const std::uint64_t mixed = splitmix64(state);
    state = mixed + index * 0xD1B54A32D192ED03ull;
    splitmix64(state);
    return splitmix64(state);
}

/// xoshiro256** 1.0. Satisfies UniformRandomBitGenerator.
class Xoshiro256 {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256(std::uint64_t seed = 0) noexcept { reseed(seed); }

    void reseed(std::uint64_t seed) noexcept {
        std::uint64_t sm = seed;
        for (auto& word : s_) {
            word = splitmix64(sm);
        }
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    friend bool operator==(const Xoshiro256&, const Xoshiro256&) = default;

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4]{};
};

/// A single random stream. Not thread-safe: give each worker its own stream.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal (ziggurat).
    double normal() { return normal_(engine_); }

    double exponential() noexcept { return -std::log(uniform()); }

    std::uint64_t poisson(double mean) {
        if (!(mean > 0.0)) {
            return 0;
        }
        std::poisson_distribution<std::uint64_t> dist(mean);
        return dist(engine_);
    }

    Xoshiro256& engine() noexcept { return engine_; }

private:
    Xoshiro256 engine_;
    boost::random::normal_distribution<double> normal_;
};

}  // namespace wfbs
