#pragma once

#include <cstdint>
#include <random>

namespace erobot {

using Rng = std::mt19937_64;

/// Stream seed for replicate `index` of an experiment seeded with `seed`.
/// A splitmix64 finalizer over (seed, index), so neighbouring indices give
/// unrelated streams and the mapping never depends on execution order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace erobot
