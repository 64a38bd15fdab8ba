#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace nsbi {

using Rng = std::mt19937_64;

/// One step of the splitmix64 generator; advances `state`.
std::uint64_t splitmix64(std::uint64_t& state);

/// Seed for the `index`-th child stream of `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Seed for a named component stream ("observation", "method", ...).
std::uint64_t named_seed(std::uint64_t master, std::string_view name);

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

double uniform01(Rng& rng);
double standard_normal(Rng& rng);

}  // namespace nsbi
