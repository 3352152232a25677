#pragma once

#include <cstdint>
#include <random>

namespace lmc {

/// Engine for one simulated path. The stream is a pure function of
/// (seed, path index, stream tag), so results never depend on which worker
/// simulates which path.
inline std::mt19937_64 path_engine(std::uint64_t seed, std::uint64_t index, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace lmc
