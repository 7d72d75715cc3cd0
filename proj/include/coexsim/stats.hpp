#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace coexsim {

struct MeanCi {
    double mean = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    long n = 0;
};

// Sample mean with a normal-approximation 95% confidence interval.
inline MeanCi mean_ci95(const std::vector<double>& xs) {
    MeanCi r;
    r.n = static_cast<long>(xs.size());
    if (r.n == 0) return r;
    double sum = 0.0;
    for (double x : xs) sum += x;
    r.mean = sum / static_cast<double>(r.n);
    if (r.n < 2) {
        r.lo = r.hi = r.mean;
        return r;
    }
    double ss = 0.0;
    for (double x : xs) {
        double d = x - r.mean;
        ss += d * d;
    }
    double se = std::sqrt(ss / static_cast<double>(r.n - 1) / static_cast<double>(r.n));
    r.lo = r.mean - 1.96 * se;
    r.hi = r.mean + 1.96 * se;
    return r;
}

inline double mean_of(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

// FNV-1a 64-bit, used for config hashes and deployment fingerprints.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64_add(std::uint64_t h, const void* data, std::size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace coexsim
