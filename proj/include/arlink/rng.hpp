#pragma once
// Seed bookkeeping. Every random draw descends from one 64-bit master seed:
// run i uses stream seed (master ^ i); inside a run, independent purposes
// (data generation, fold assignment, Monte Carlo) take substream(run_seed, tag).

#include <cstdint>
#include <random>

namespace arlink {

using Rng = std::mt19937_64;

inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return master ^ index;
}

/// splitmix64 finalizer applied to (seed + tag); decorrelates substreams.
inline std::uint64_t substream(std::uint64_t seed, std::uint64_t tag) noexcept {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace tags {
inline constexpr std::uint64_t kGenerate = 1;
inline constexpr std::uint64_t kFolds = 2;
inline constexpr std::uint64_t kConcentration = 3;
}  // namespace tags

}  // namespace arlink
