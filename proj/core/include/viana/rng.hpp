#pragma once

#include <cstdint>

namespace viana {

// Counter-style stream derivation: the generator for ensemble member i is a
// pure function of (seed, tag, i), so results do not depend on which thread
// evaluates which member.
struct Rng {
    std::uint64_t s[4];

    static constexpr std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    // xoshiro256++ step
    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s[0] + s[3], 23) + s[0];
        const std::uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = rotl(s[3], 45);
        return result;
    }

    // uniform in [0, 1)
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }
};

// Stream tags keep the sub-experiments of one run statistically disjoint.
enum : std::uint64_t {
    kTagEnsemble = 0x01,
    kTagTail = 0x02,
    kTagCalibrate = 0x03,
    kTagGrid = 0x04,
    kTagBall = 0x05,
    kTagScan = 0x06,
    kTagUlam = 0x07,
    kTagBootstrap = 0x08,
    kTagSpectral = 0x09,
};

inline Rng stream_rng(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
    std::uint64_t h = seed;
    h = Rng::mix(h ^ (tag + 0x9e3779b97f4a7c15ULL));
    h = Rng::mix(h ^ (index + 0xd1b54a32d192ed03ULL));
    Rng r;
    r.s[0] = Rng::mix(h + 0x9e3779b97f4a7c15ULL);
    r.s[1] = Rng::mix(h + 0x3c6ef372fe94f82aULL);
    r.s[2] = Rng::mix(h + 0xdaa66d2c7ddf743fULL);
    r.s[3] = Rng::mix(h + 0x78dde6e67d29f054ULL);
    return r;
}

}  // namespace viana
