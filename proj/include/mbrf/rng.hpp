#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mbrf {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Derives an independent stream seed from a base seed, a stream name and an
/// index. Distinct (tag, index) pairs give unrelated streams, so adding a new
/// consumer never shifts the draws seen by an existing one.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index = 0);

inline Rng make_stream(std::uint64_t base, std::string_view tag, std::uint64_t index = 0) {
    return Rng(derive_seed(base, tag, index));
}

/// Uniform double in [0, 1) built from the top 53 bits of one draw.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace mbrf
