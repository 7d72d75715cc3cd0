#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace coexsim {

// SplitMix64 step. Used both as a seed expander and as a stateless
// counter-based hash for per-entity random draws.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Order-sensitive fold of several values into one 64-bit key.
inline std::uint64_t mix(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x2545f4914f6cdd1dULL;
    for (std::uint64_t p : parts) h = splitmix64(h ^ p);
    return h;
}

// Uniform double in [0, 1) from a hash key: top 53 bits.
inline double hash_u01(std::uint64_t key) {
    return static_cast<double>(splitmix64(key) >> 11) * 0x1.0p-53;
}

// Salts separating independent random purposes. Per-entity draws are
// keyed on (drop seed, salt, entity ids, time indices) so that the same
// deployment and traffic realization is reproduced regardless of which
// scheme or code path consumes them (common random numbers).
enum RngSalt : std::uint64_t {
    kSaltDeploy = 0x01,
    kSaltAbs = 0x02,
    kSaltTraffic = 0x03,
    kSaltBackoff = 0x04,
    kSaltOrder = 0x05,
    kSaltUsage = 0x06,
    kSaltPriority = 0x07,
    kSaltSpan = 0x08,
    kSaltSensor = 0x09,
    kSaltShadow = 0x0a,
    kSaltProbe = 0x0b,
    kSaltDrop = 0x0c,
};

// Sequential PRNG for construction-time sampling (deployments, test
// scenes). mt19937_64 seeded through SplitMix64.
class Prng {
public:
    explicit Prng(std::uint64_t seed) : gen_(splitmix64(seed ^ 0x6a09e667f3bcc909ULL)) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(gen_); }
    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(gen_);
    }
    int uniform_int(int lo, int hi) {  // inclusive bounds
        return std::uniform_int_distribution<int>(lo, hi)(gen_);
    }
    long poisson(double mean) {
        if (mean <= 0.0) return 0;
        return std::poisson_distribution<long>(mean)(gen_);
    }
    double normal(double mean, double sigma) {
        return std::normal_distribution<double>(mean, sigma)(gen_);
    }
    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
};

// Per-drop seed derivation: documented so runs are shardable.
inline std::uint64_t drop_seed(std::uint64_t master_seed, long drop_index) {
    return mix({master_seed, kSaltDrop, static_cast<std::uint64_t>(drop_index)});
}

}  // namespace coexsim
