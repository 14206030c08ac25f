#pragma once

#include <cstdint>
#include <cmath>
#include <limits>

namespace fvmod {

// Counter-based random numbers (Philox4x32-10). Every draw is a pure
// function of (key, counter), so values do not depend on evaluation
// order or thread scheduling. Keys are derived from
// (seed, replica, purpose); counters are owned by the caller.

struct Philox4x32 {
    uint32_t v[4];
};

namespace detail {

inline constexpr uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr uint32_t kPhiloxW1 = 0xBB67AE85u;

inline uint64_t splitmix64(uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline Philox4x32 philox4x32_10(uint64_t key, uint64_t c01, uint64_t c23) {
    uint32_t k0 = static_cast<uint32_t>(key);
    uint32_t k1 = static_cast<uint32_t>(key >> 32);
    uint32_t x0 = static_cast<uint32_t>(c01);
    uint32_t x1 = static_cast<uint32_t>(c01 >> 32);
    uint32_t x2 = static_cast<uint32_t>(c23);
    uint32_t x3 = static_cast<uint32_t>(c23 >> 32);
    for (int round = 0; round < 10; ++round) {
        uint64_t p0 = static_cast<uint64_t>(kPhiloxM0) * x0;
        uint64_t p1 = static_cast<uint64_t>(kPhiloxM1) * x2;
        uint32_t y0 = static_cast<uint32_t>(p1 >> 32) ^ x1 ^ k0;
        uint32_t y1 = static_cast<uint32_t>(p1);
        uint32_t y2 = static_cast<uint32_t>(p0 >> 32) ^ x3 ^ k1;
        uint32_t y3 = static_cast<uint32_t>(p0);
        x0 = y0; x1 = y1; x2 = y2; x3 = y3;
        k0 += kPhiloxW0;
        k1 += kPhiloxW1;
    }
    return Philox4x32{{x0, x1, x2, x3}};
}

inline uint64_t lanes64(const Philox4x32& b, int half) {
    return (static_cast<uint64_t>(b.v[2 * half + 1]) << 32) | b.v[2 * half];
}

// Strictly inside (0,1) so that log() stays finite.
inline double u01(uint64_t bits) {
    return (static_cast<double>(bits >> 12) + 0.5) * 0x1p-52;
}

} // namespace detail

enum class StreamPurpose : uint64_t {
    events = 1,
    brownian = 2,
    init_positions = 3,
    generic = 4,
};

inline uint64_t derive_key(uint64_t seed, uint64_t replica, StreamPurpose purpose) {
    uint64_t k = detail::splitmix64(seed ^ 0x243F6A8885A308D3ull);
    k = detail::splitmix64(k ^ replica * 0x13198A2E03707344ull);
    k = detail::splitmix64(k ^ static_cast<uint64_t>(purpose) * 0xA4093822299F31D0ull);
    return k;
}

// Sequential stream over a fixed key; satisfies UniformRandomBitGenerator.
class RngStream {
public:
    using result_type = uint64_t;

    RngStream() : key_(0), counter_(0) {}
    RngStream(uint64_t seed, uint64_t replica, StreamPurpose purpose)
        : key_(derive_key(seed, replica, purpose)), counter_(0) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<uint64_t>::max(); }

    result_type operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        Philox4x32 b = detail::philox4x32_10(key_, counter_++, 0);
        spare_ = detail::lanes64(b, 1);
        have_spare_ = true;
        return detail::lanes64(b, 0);
    }

    double uniform() { return detail::u01((*this)()); }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    // Uniform integer in [0, n).
    uint64_t below(uint64_t n) {
        // Rejection to avoid modulo bias.
        uint64_t limit = max() - max() % n;
        for (;;) {
            uint64_t x = (*this)();
            if (x < limit) return x % n;
        }
    }

    double normal() {
        if (have_normal_) {
            have_normal_ = false;
            return normal_spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        normal_spare_ = r * std::sin(a);
        have_normal_ = true;
        return r * std::cos(a);
    }

private:
    uint64_t key_;
    uint64_t counter_;
    uint64_t spare_ = 0;
    bool have_spare_ = false;
    double normal_spare_ = 0.0;
    bool have_normal_ = false;
};

// Stateless Gaussian pairs addressed by (key, id, step, block). Used for
// per-lineage Brownian increments: the value is independent of the order
// in which lineages get evaluated.
inline void counter_normal_pair(uint64_t key, uint64_t id, uint64_t step, uint64_t block,
                                double& z0, double& z1) {
    Philox4x32 b = detail::philox4x32_10(key, id, (step << 24) ^ block);
    double u1 = detail::u01(detail::lanes64(b, 0));
    double u2 = detail::u01(detail::lanes64(b, 1));
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    z0 = r * std::cos(a);
    z1 = r * std::sin(a);
}

} // namespace fvmod
