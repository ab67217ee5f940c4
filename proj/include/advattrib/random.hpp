#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace advattrib {

using Rng = std::mt19937_64;

/// Expands a master seed into an independent sub-seed for a named component.
/// The mapping is stable across runs and platforms.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);

std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index);

/// Uniform integer in [0, n).
std::size_t uniform_index(Rng& rng, std::size_t n);

/// Uniform real in [0, 1) with 53 bits of randomness.
double uniform01(Rng& rng);

}  // namespace advattrib
