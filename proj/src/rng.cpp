#include "toothalign/rng.hpp"

#include <cmath>
#include <numbers>

#include "toothalign/geometry.hpp"

namespace toothalign {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage, std::string_view case_id) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ fnv1a(stage));
  h = splitmix64(h ^ fnv1a(case_id));
  return h;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage, std::uint64_t index) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ fnv1a(stage));
  return splitmix64(h ^ splitmix64(index));
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

double standard_normal(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Vec3 random_unit_vector(Rng& rng) {
  for (;;) {
    const Vec3 v{standard_normal(rng), standard_normal(rng), standard_normal(rng)};
    const double n = norm(v);
    if (n > 1e-12) return v / n;
  }
}

}  // namespace toothalign
