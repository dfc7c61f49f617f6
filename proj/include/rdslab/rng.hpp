#ifndef RDSLAB_RNG_HPP
#define RDSLAB_RNG_HPP

#include <cmath>
#include <cstdint>

// Counter-based random number generation. Every value is a pure function of
// a 64-bit key chain, so any sub-stream can be regenerated independently and
// concurrent readers always observe identical values.

namespace rdslab {

// Stafford's mix13 finalizer (the splitmix64 output stage). Bijective on u64.
inline std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

inline std::uint64_t hash2(std::uint64_t a, std::uint64_t b) {
    return mix64(mix64(a + 0x9e3779b97f4a7c15ULL) ^ b);
}

inline std::uint64_t hash3(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix64(hash2(a, b) ^ c);
}

inline std::uint64_t hash4(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                           std::uint64_t d) {
    return mix64(hash3(a, b, c) ^ d);
}

// u64 -> (0,1), never returns 0 or 1.
inline double u64_to_unit(std::uint64_t x) {
    return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
}

// Standard normal from a single key via Box-Muller on two derived uniforms.
inline double key_gaussian(std::uint64_t key) {
    const double u1 = u64_to_unit(mix64(key ^ 0x2545f4914f6cdd1dULL));
    const double u2 = u64_to_unit(mix64(key + 0x6a09e667f3bcc909ULL));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

// Maps (base seed, replica index) to a stream seed. Injective in practice
// (mix64 is bijective, collisions need equal chained keys).
inline std::uint64_t seed_replica(std::uint64_t base_seed, std::uint64_t replica) {
    return hash3(base_seed, 0x7265706c696361ULL, replica);
}

// Small sequential engine for Markov-chain style simulations.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next_u64() {
        state += 0x9e3779b97f4a7c15ULL;
        return mix64(state);
    }

    double next_uniform() { return u64_to_unit(next_u64()); }

    double next_gaussian() {
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(6.283185307179586476925286766559 * u2);
    }

    // uniform draw in {0, ..., n-1}
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(next_uniform() * static_cast<double>(n)) % n;
    }
};

}  // namespace rdslab

#endif
