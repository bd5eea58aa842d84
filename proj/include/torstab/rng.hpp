#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace torstab {

using RngEngine = std::mt19937_64;

// Collision-resistant mixing of (master seed, sample index, purpose tag) into
// an independent stream seed. Same inputs always give the same seed; distinct
// purpose tags give statistically unrelated streams.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, std::string_view purpose);

inline RngEngine make_engine(std::uint64_t master, std::uint64_t index, std::string_view purpose) {
    return RngEngine(derive_seed(master, index, purpose));
}

}  // namespace torstab
