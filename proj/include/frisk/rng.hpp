#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "frisk/normal.hpp"

namespace frisk {

// xoshiro256++ with splitmix64 seeding. We carry our own generator instead of
// <random> engines so that streams are reproducible byte-for-byte across
// standard libraries and across thread counts (every parallel task derives its
// own stream from a seed plus stream index).
class Rng {
public:
    explicit Rng(std::uint64_t seed) { seed_state(seed, 0); }
    Rng(std::uint64_t seed, std::uint64_t stream) { seed_state(seed, stream); }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1), 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in the open interval (0, 1); safe to feed into inverse CDFs.
    double uniform01_open() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Standard normal draw via the inverse CDF (deterministic, no state beyond
    // the uniform stream).
    double normal() { return norm_quantile(uniform01_open()); }

    // Fisher-Yates shuffle of 0..n-1.
    std::vector<int> permutation(int n) {
        std::vector<int> p(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
        for (int i = n - 1; i > 0; --i) {
            const int j = static_cast<int>(next_u64() % static_cast<std::uint64_t>(i + 1));
            std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
        }
        return p;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    void seed_state(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t x = seed ^ (0x6a09e667f3bcc909ull + stream * 0x9e3779b97f4a7c15ull);
        for (auto& s : s_) s = splitmix64(x);
    }

    std::uint64_t s_[4];
};

// FNV-1a, used to turn stage names into seed material.
constexpr std::uint64_t hash_tag(std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const char c : tag) {
        h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
        h *= 0x100000001b3ull;
    }
    return h;
}

// Seed splitting rule: every pipeline stage and every parallel task derives
// its stream as substream(master, tag, index...). Documented in the README so
// stages can be re-run in isolation.
inline std::uint64_t substream(std::uint64_t seed, std::string_view tag,
                               std::uint64_t i = 0, std::uint64_t j = 0) {
    std::uint64_t x = seed ^ hash_tag(tag);
    x ^= 0x9e3779b97f4a7c15ull * (i + 1);
    x ^= 0xc2b2ae3d27d4eb4full * (j + 1);
    // one splitmix round to decorrelate neighbouring indices
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

} // namespace frisk
