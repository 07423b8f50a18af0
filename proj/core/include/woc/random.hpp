#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace woc {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seeds an independent generator from a base seed and a path of indices,
/// e.g. `stream_for(seed, {replicate})`. The result depends only on the
/// arguments, never on call order, so replicates may run on any thread.
Rng stream_for(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

}  // namespace woc
