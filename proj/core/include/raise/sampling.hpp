#pragma once

#include <cstdint>
#include <vector>

#include "raise/types.hpp"

namespace raisesql {

/// Hamilton apportionment: floor(fraction * size) per stratum, then the
/// remaining round(fraction * total) seats go to the largest remainders
/// (ties: larger stratum, then lower index).
std::vector<std::size_t> allocate_largest_remainder(const std::vector<std::size_t>& stratum_sizes, double fraction);

/// Seeded stratified sample over the difficulty strata. Output keeps input
/// order. Identical across platforms for the same seed.
std::vector<Question> stratified_sample(const std::vector<Question>& questions, double fraction, std::uint64_t seed);

}  // namespace raisesql
