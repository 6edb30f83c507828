#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace mlo {

// Deterministic RNG stream. All draws go through inverse-transform sampling
// on uniform doubles so sequences do not depend on the standard library's
// distribution implementations.
class RngStream {
public:
    explicit RngStream(uint64_t seed) : gen_(seed) {}

    // Derives an independent stream, e.g. keyed by (seed, station id).
    static RngStream keyed(uint64_t seed, uint64_t key) {
        return RngStream(seed * 0x9E3779B97F4A7C15ULL + key * 0xBF58476D1CE4E5B9ULL + 1);
    }

    // Uniform on [0,1).
    double uniform() {
        return std::ldexp(static_cast<double>(gen_() >> 11), -53);
    }

    // Uniform on (0,1].
    double uniform_pos() { return 1.0 - uniform(); }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // Inclusive integer range.
    int uniform_int(int a, int b) {
        return a + static_cast<int>(uniform() * static_cast<double>(b - a + 1));
    }

    double exponential(double mean) { return -mean * std::log(uniform_pos()); }

    uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

// FNV-1a, used for config hashes and event-log digests.
inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = 0xCBF29CE484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

}  // namespace mlo
