#pragma once

#include <array>
#include <cstdint>

#include "metricconf/error.hpp"

namespace metricconf {

namespace detail {

// splitmix64 (Steele, Lea & Flood 2014; public-domain reference constants).
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

} // namespace detail

// One independent, replayable random stream. The generator is
// xoshiro256** 1.0 (Blackman & Vigna 2018, reference constants), with its
// 256-bit state seeded from splitmix64 applied to
//     seed ^ (0x9E3779B97F4A7C15 * stream_index).
// The multiplier is odd, so distinct stream indices under one seed always
// seed from distinct splitmix64 states. The same (seed, stream_index)
// therefore produces the same draw sequence on every platform, thread
// schedule, and run; resampling loops use one stream per iteration so
// parallel and serial execution are bitwise identical.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_index = 0) {
        std::uint64_t sm = seed ^ (0x9E3779B97F4A7C15ULL * stream_index);
        for (auto& word : state_)
            word = detail::splitmix64_next(sm);
    }

    std::uint64_t next() {
        const std::uint64_t result = detail::rotl64(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl64(state_[3], 45);
        return result;
    }

private:
    std::array<std::uint64_t, 4> state_;
};

// Unbiased index in [0, n) by rejection on the 64-bit output; draws below
// 2^64 mod n are discarded so every index has equal mass.
inline std::uint64_t uniform_index(RngStream& stream, std::uint64_t n) {
    if (n == 0)
        throw domain_error("uniform_index: n must be positive");
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        const std::uint64_t draw = stream.next();
        if (draw >= threshold)
            return draw % n;
    }
}

inline bool fair_coin(RngStream& stream) {
    return (stream.next() >> 63) != 0;
}

// Uniform double on the open interval (0, 1): 53-bit mantissa draw shifted
// by half a step, so neither endpoint is reachable.
inline double uniform_open01(RngStream& stream) {
    const std::uint64_t mantissa = stream.next() >> 11;
    return (static_cast<double>(mantissa) + 0.5) * 0x1.0p-53;
}

} // namespace metricconf
