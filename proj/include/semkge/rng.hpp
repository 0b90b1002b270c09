#pragma once
// Deterministic randomness. Everything that draws a random number in this
// project goes through SplitMix64 so that runs are bit-reproducible across
// platforms. std::uniform_*_distribution is implementation-defined and would
// break the reproducibility contract, so it is not used anywhere.

#include <cstdint>
#include <initializer_list>

namespace semkge {

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53 bits of precision.
    double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double next_in(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    // Uniform integer in [0, n). Lemire multiply-shift; the bias for n far
    // below 2^64 is immeasurably small.
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * n) >> 64);
    }

    bool next_bool() { return (next() & 1ULL) != 0; }

private:
    std::uint64_t state_;
};

// Collapses a key tuple into one seed. Used to derive independent streams
// for (master_seed, epoch, triple_index)-style keys: the resulting generator
// is a pure function of the key, independent of call order or threading.
inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t acc = 0x6a09e667f3bcc909ULL;
    for (std::uint64_t p : parts) {
        SplitMix64 g(acc ^ p);
        acc = g.next();
    }
    return acc;
}

inline SplitMix64 seeded_rng(std::initializer_list<std::uint64_t> parts) {
    return SplitMix64(mix_seed(parts));
}

// Stream tags keep unrelated draw families (shuffling, sampling, label
// flips, initialization) from reusing each other's sequences.
namespace rng_stream {
inline constexpr std::uint64_t init = 0x01;
inline constexpr std::uint64_t shuffle = 0x02;
inline constexpr std::uint64_t negatives = 0x03;
inline constexpr std::uint64_t pll_flip = 0x04;
inline constexpr std::uint64_t bcel_flip = 0x05;
}  // namespace rng_stream

}  // namespace semkge
