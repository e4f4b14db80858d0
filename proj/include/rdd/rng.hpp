#pragma once

#include <cmath>
#include <cstdint>

namespace rdd {

// SplitMix64 finalizer (Steele, Lea, Flood 2014). Used both for seeding and
// for deriving independent substreams from (master seed, stream index).
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Substream seed for replication/chunk `index` under `master`. The constant is
// the SplitMix64 golden-ratio increment; the mapping is fixed so that any
// single replication can be re-run in isolation.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t s = master ^ (0x9E3779B97F4A7C15ull * (index + 1));
    return splitmix64_next(s);
}

// xoshiro256++ (Blackman & Vigna), seeded via SplitMix64.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        for (auto& w : state_) w = splitmix64_next(seed);
    }

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

    // Uniform on [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on {0,...,n-1} by rejection-free scaling; n is small here so the
    // bias of the multiply-shift method (< 2^-53) is irrelevant.
    std::uint64_t uniform_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
    }

    bool bernoulli_half() { return (next_u64() >> 63) != 0; }

    // Standard normal via Box-Muller. The sine partner is discarded to keep
    // the stream position independent of call parity.
    double normal() {
        double u1 = uniform();
        // map [0,1) -> (0,1]
        u1 = 1.0 - u1;
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t state_[4];
};

}  // namespace rdd
