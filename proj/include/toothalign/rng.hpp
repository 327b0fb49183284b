#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace toothalign {

struct Vec3;

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Stable 64-bit FNV-1a; std::hash is not portable across standard libraries.
std::uint64_t fnv1a(std::string_view bytes);

/// Derives an independent stream seed from a master seed, a stage name and a
/// case id. All randomness in the pipeline flows through this.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage, std::string_view case_id = {});

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage, std::uint64_t index);

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

// The standard distributions are implementation-defined; these are not, so
// corpora are identical across standard libraries.

/// Uniform in [0, 1) with 53 random bits.
double uniform01(Rng& rng);
double uniform(Rng& rng, double lo, double hi);
/// Box-Muller.
double standard_normal(Rng& rng);
/// Uniformly distributed unit vector.
Vec3 random_unit_vector(Rng& rng);

}  // namespace toothalign
