#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace gogan::ad {

// mt19937_64 is fully specified by the standard; the distributions below are
// written out by hand so sampled values do not depend on the standard library.
using Rng = std::mt19937_64;

/// Uniform in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform integer in [0, n) by rejection.
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);

/// Standard normal via Box-Muller (one draw per call, the pair's twin is discarded).
double standard_normal(Rng& rng);

std::string serialize_rng(const Rng& rng);
Rng deserialize_rng(const std::string& text);

}  // namespace gogan::ad
