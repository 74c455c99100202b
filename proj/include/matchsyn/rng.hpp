#pragma once

#include <cmath>
#include <cstdint>

namespace matchsyn {

// Murmur3-style finalizer. Used to derive independent streams from
// (seed, counter) pairs so a value at a given index never depends on
// generation order or thread count.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 33;
    z *= 0xff51afd7ed558ccdull;
    z ^= z >> 33;
    z *= 0xc4ceb9fe1a85ec53ull;
    z ^= z >> 33;
    return z;
}

constexpr std::uint64_t derive_stream(std::uint64_t master, std::uint64_t index) {
    return mix64(master ^ mix64(index + 0x9e3779b97f4a7c15ull));
}

constexpr std::uint64_t derive_stream(std::uint64_t master, std::uint64_t index,
                                      std::uint64_t sub) {
    return mix64(derive_stream(master, index) ^ mix64(sub + 0xda942042e4dd58b5ull));
}

// SplitMix64. Small, fast, and fully portable; every draw is a pure
// function of the initial state.
class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t state) : state_(state) {}

    constexpr std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, n). Multiply-shift reduction; bias is
    // immaterial for n far below 2^64 and the result is portable.
    std::uint64_t bounded(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * n) >> 64);
    }

    // Standard normal via Box-Muller (cosine branch only).
    double normal() {
        const double u1 = static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
    }

private:
    std::uint64_t state_;
};

}  // namespace matchsyn
