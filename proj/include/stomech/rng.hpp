#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace stomech {

/// Philox 4x32-10 counter-based generator. Every draw is a pure function of
/// (seed, counter), so path-parallel simulation is reproducible regardless of
/// scheduling: the stream for path i, step k never depends on who computed
/// path i-1.
struct Philox {
    uint32_t key0, key1;

    explicit Philox(uint64_t seed)
        : key0(static_cast<uint32_t>(seed)), key1(static_cast<uint32_t>(seed >> 32)) {}

    static std::array<uint32_t, 4> round(std::array<uint32_t, 4> c, uint32_t k0, uint32_t k1) {
        constexpr uint64_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
        uint64_t p0 = M0 * c[0];
        uint64_t p1 = M1 * c[2];
        return {static_cast<uint32_t>(p1 >> 32) ^ c[1] ^ k0, static_cast<uint32_t>(p1),
                static_cast<uint32_t>(p0 >> 32) ^ c[3] ^ k1, static_cast<uint32_t>(p0)};
    }

    std::array<uint32_t, 4> block(uint32_t c0, uint32_t c1, uint32_t c2, uint32_t c3) const {
        constexpr uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
        std::array<uint32_t, 4> c{c0, c1, c2, c3};
        uint32_t k0 = key0, k1 = key1;
        for (int r = 0; r < 10; ++r) {
            c = round(c, k0, k1);
            k0 += W0;
            k1 += W1;
        }
        return c;
    }
};

/// Stream tags keep independent uses of the same seed from colliding.
enum class RngStream : uint32_t { Increments = 0, InitialLaw = 1, Auxiliary = 2 };

inline double uniform_from_bits(uint32_t lo, uint32_t hi) {
    uint64_t x = (static_cast<uint64_t>(hi) << 32) | lo;
    // 53-bit mantissa, strictly inside (0,1)
    return (static_cast<double>(x >> 11) + 0.5) * 0x1p-53;
}

/// Two standard normals from one Philox block (Box-Muller).
inline std::array<double, 2> normal_pair(const Philox& rng, uint32_t c0, uint32_t c1,
                                         uint32_t c2, RngStream stream) {
    auto w = rng.block(c0, c1, c2, static_cast<uint32_t>(stream));
    double u1 = uniform_from_bits(w[0], w[1]);
    double u2 = uniform_from_bits(w[2], w[3]);
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(a), r * std::sin(a)};
}

inline std::array<double, 2> uniform_pair(const Philox& rng, uint32_t c0, uint32_t c1,
                                          uint32_t c2, RngStream stream) {
    auto w = rng.block(c0, c1, c2, static_cast<uint32_t>(stream));
    return {uniform_from_bits(w[0], w[1]), uniform_from_bits(w[2], w[3])};
}

} // namespace stomech
