#pragma once

#include <cstdint>
#include <utility>

namespace fundus {

// One splitmix64 step. Used to expand seeds and to derive per-stage streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives an independent stream seed from a base seed and a fixed tag.
/// Every stage of the pipeline gets its own tag so streams never collide.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
    std::uint64_t s = base ^ (tag * 0x9e3779b97f4a7c15ULL);
    return splitmix64(s);
}

/// Deterministic 64-bit generator (xoshiro256++), seeded via splitmix64.
/// The output stream depends only on the seed, never on the platform or
/// standard library, so seeded results reproduce bit-for-bit everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        for (auto& word : state_) word = splitmix64(seed);
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

    /// Uniform double in [0,1) with 53 bits of precision.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo,hi). Returns lo when the range is empty.
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    /// Uniform integer in [0,n), rejection-sampled so there is no modulo bias.
    std::uint64_t next_below(std::uint64_t n) {
        std::uint64_t x, r;
        do {
            x = next_u64();
            r = x % n;
        } while (x - r > std::uint64_t(0) - n);
        return r;
    }

    bool bernoulli(double p) { return next_double() < p; }

    /// Fisher-Yates shuffle.
    template <class RandomIt>
    void shuffle(RandomIt first, RandomIt last) {
        const auto n = static_cast<std::uint64_t>(last - first);
        for (std::uint64_t i = n; i > 1; --i) {
            const std::uint64_t j = next_below(i);
            std::swap(first[i - 1], first[j]);
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
};

}  // namespace fundus
