#include "epivar/rng.hpp"

#include <cmath>
#include <numbers>

namespace epivar {

namespace {
constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;
}  // namespace

std::uint64_t Rng::mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) : key_(mix(seed + kGoldenGamma)) {}

Rng::Rng(std::uint64_t key, int) : key_(key) {}

std::uint64_t Rng::next_u64() { return mix(key_ + (++counter_) * kGoldenGamma); }

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_double_open() {
  return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double Rng::next_normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double u1 = next_double_open();
  const double u2 = next_double();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  cached_normal_ = r * std::sin(t);
  has_cached_normal_ = true;
  return r * std::cos(t);
}

Rng Rng::derive(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
  return Rng(derive_seed(key_, a, b, c), 0);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
  std::uint64_t k = base;
  k = Rng::mix(k ^ (a + kGoldenGamma));
  k = Rng::mix(k ^ (b + 2 * kGoldenGamma));
  k = Rng::mix(k ^ (c + 3 * kGoldenGamma));
  return k;
}

}  // namespace epivar
