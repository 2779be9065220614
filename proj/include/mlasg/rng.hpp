#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mlasg {

using Rng = std::mt19937_64;

//! splitmix64 step; used to fold stream identifiers into seeds.
constexpr std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

//! Seed of an independent stream identified by a global seed and a path of ids.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path)
{
    std::uint64_t h = mix64(seed);
    for (std::uint64_t id : path) {
        h = mix64(h ^ mix64(id));
    }
    return h;
}

inline Rng make_rng(std::uint64_t seed)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    return Rng(seq);
}

}  // namespace mlasg
