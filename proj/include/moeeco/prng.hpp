#pragma once

#include <cmath>
#include <cstdint>

namespace moeeco {

// Counter-based 64-bit generator. Output i of a stream is
// mix(key + i * GOLDEN), with mix the SplitMix64 finalizer, so a stream is a
// pure function of (key, counter): platform-independent, trivially
// checkpointable, and splittable into statistically independent child
// streams. Every random draw in the project (data, weights, routing,
// shuffling) comes from one of these streams; stream keys are derived from
// (seed, purpose).

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Fixed purpose tags; one independent stream per (purpose, seed) pair.
enum class Stream : std::uint64_t {
    Data = 1,
    Weights = 2,
    Routing = 3,
    Shuffle = 4,
};

class Prng {
   public:
    Prng() = default;
    Prng(std::uint64_t seed, Stream purpose)
        : key_(mix64(mix64(seed + kGolden) ^ mix64(static_cast<std::uint64_t>(purpose) * kGolden + 1))) {}

    // Child stream; does not advance this stream.
    Prng split(std::uint64_t child) const {
        Prng out;
        out.key_ = mix64(key_ ^ mix64(child * kGolden + 0x5851F42D4C957F2DULL));
        return out;
    }

    std::uint64_t next_u64() { return mix64(key_ + (++ctr_) * kGolden); }

    // [0, 1) with 53 bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Unbiased integer in [0, bound) by rejection.
    std::uint64_t next_below(std::uint64_t bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    // Standard normal via Box-Muller; consumes two uniforms per call so the
    // generator state stays a single counter.
    double next_gaussian() {
        const double u1 = 1.0 - next_double();  // (0, 1]
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return ctr_; }
    void set_counter(std::uint64_t c) { ctr_ = c; }

   private:
    std::uint64_t key_ = 0;
    std::uint64_t ctr_ = 0;
};

}  // namespace moeeco
