#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace disagg {

// splitmix64 finalizer; used to derive independent streams from one user seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Folds a sequence of stream tags (day, purpose, restart, ...) into a seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) noexcept {
    std::uint64_t s = mix_seed(base);
    for (auto t : tags) s = mix_seed(s ^ mix_seed(t + 0x632be59bd9b4e019ULL));
    return s;
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> tags = {}) {
    return Rng{derive_seed(base, tags)};
}

// Stream purposes, kept distinct so that adding a consumer never shifts another's draws.
namespace stream {
inline constexpr std::uint64_t kNoise = 1;
inline constexpr std::uint64_t kLayout = 2;
inline constexpr std::uint64_t kWeather = 3;
inline constexpr std::uint64_t kTexture = 4;
inline constexpr std::uint64_t kPerturbation = 5;
inline constexpr std::uint64_t kInsitu = 6;
inline constexpr std::uint64_t kClusterInit = 7;
inline constexpr std::uint64_t kClusterSample = 8;
inline constexpr std::uint64_t kFolds = 9;
inline constexpr std::uint64_t kIrrigation = 10;
}  // namespace stream

}  // namespace disagg
