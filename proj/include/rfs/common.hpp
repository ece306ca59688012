#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>
#include <vector>

namespace rfs {

// Stable 64-bit mixing (splitmix64 finalizer). Used to derive independent
// sub-seeds from experiment coordinates so results never depend on execution
// order or thread count.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t seed_hash(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x2545f4914f6cdd1dULL;
    for (std::uint64_t p : parts) h = mix64(h ^ mix64(p));
    return h;
}

inline std::uint64_t tag64(std::string_view s) {
    // FNV-1a, for mixing short string tags into seed derivations
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
};

inline MeanStderr mean_stderr(const std::vector<double>& v) {
    MeanStderr out;
    out.n = v.size();
    if (v.empty()) return out;
    double s = 0.0;
    for (double x : v) s += x;
    out.mean = s / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - out.mean) * (x - out.mean);
        double var = ss / static_cast<double>(v.size() - 1);
        out.stderr_ = std::sqrt(var / static_cast<double>(v.size()));
    }
    return out;
}

}  // namespace rfs
