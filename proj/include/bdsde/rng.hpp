#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace bdsde {

/// Identifies one independent random stream. Draws are pure functions of
/// (seed, stream, index, component), so any window of a stream can be
/// regenerated without touching the rest of it.
struct StreamKey {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    friend bool operator==(const StreamKey&, const StreamKey&) = default;
};

/// Stream-id namespaces. Keeps driving-noise streams, probe streams and
/// evaluation streams on disjoint ids by construction.
enum class StreamKind : std::uint64_t {
    state_noise = 1,   // W, one stream per sample path
    env_noise = 2,     // B, one stream per environment
    probe = 3,         // assumption probing, one stream per worker
    evaluation = 4,    // held-out ensembles for norm estimates
    scratch = 5,
};

constexpr std::uint64_t stream_id(StreamKind kind, std::uint64_t index) {
    return (static_cast<std::uint64_t>(kind) << 48) | (index & 0xffffffffffffULL);
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline void philox_round(std::array<std::uint32_t, 4>& ctr, std::array<std::uint32_t, 2>& key) {
    constexpr std::uint32_t m0 = 0xD2511F53u;
    constexpr std::uint32_t m1 = 0xCD9E8D57u;
    const std::uint64_t p0 = static_cast<std::uint64_t>(m0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(m1) * ctr[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += 0x9E3779B9u;
    key[1] += 0xBB67AE85u;
}

/// Philox4x32-10 block. The 128-bit counter indexes the draw, the 64-bit key
/// is derived from (seed, stream) by splitmix hashing.
inline std::array<std::uint32_t, 4> philox_block(StreamKey sk, std::uint64_t ctr_lo,
                                                 std::uint64_t ctr_hi) {
    const std::uint64_t k = splitmix64(splitmix64(sk.seed) ^ sk.stream);
    std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(k),
                                        static_cast<std::uint32_t>(k >> 32)};
    std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(ctr_lo), static_cast<std::uint32_t>(ctr_lo >> 32),
        static_cast<std::uint32_t>(ctr_hi), static_cast<std::uint32_t>(ctr_hi >> 32)};
    for (int round = 0; round < 10; ++round) philox_round(ctr, key);
    return ctr;
}

inline double to_unit_open(std::uint64_t bits) {
    // (0,1): 53 mantissa bits, offset by half an ulp so log() is safe.
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace detail

/// Uniform draw in (0,1) at a counter position. `index` may be negative;
/// two-sided indexing is what makes time shifts exact re-windowings.
inline double uniform_at(StreamKey sk, std::int64_t index, std::uint32_t component) {
    const auto blk = detail::philox_block(sk, static_cast<std::uint64_t>(index),
                                          (static_cast<std::uint64_t>(component) << 32) | 0x1u);
    return detail::to_unit_open((static_cast<std::uint64_t>(blk[0]) << 32) | blk[1]);
}

/// Standard normal draw at a counter position (Box-Muller on one Philox block).
inline double normal_at(StreamKey sk, std::int64_t index, std::uint32_t component) {
    const auto blk = detail::philox_block(sk, static_cast<std::uint64_t>(index),
                                          (static_cast<std::uint64_t>(component) << 32) | 0x2u);
    const double u1 = detail::to_unit_open((static_cast<std::uint64_t>(blk[0]) << 32) | blk[1]);
    const double u2 = detail::to_unit_open((static_cast<std::uint64_t>(blk[2]) << 32) | blk[3]);
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

}  // namespace bdsde
