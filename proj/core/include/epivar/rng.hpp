#pragma once

#include <cstdint>

namespace epivar {

/// Counter-based pseudorandom stream.
///
/// The i-th output is a fixed 64-bit mix (the splitmix64 finalizer) of
/// key + i * GOLDEN_GAMMA, so a stream is a pure function of (key, i) and a
/// given seed reproduces bit-identical draws on every platform. Substreams
/// for independent work items (ensemble members, trials, batches) are
/// derived by hashing the parent key with the substream index rather than by
/// splitting the sequence, so their outputs never overlap by construction.
///
/// Normal variates use the Box-Muller transform on 53-bit uniforms; each
/// pair of normals consumes exactly two counter steps.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform draw in [0, 1) with 53 random mantissa bits.
  double next_double();

  /// Uniform draw in (0, 1]; never returns 0 (safe to pass to log).
  double next_double_open();

  /// Standard normal draw.
  double next_normal();

  /// Independent substream addressed by (a, b, c) under this stream's key.
  Rng derive(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const;

  static std::uint64_t mix(std::uint64_t z);

 private:
  Rng(std::uint64_t key, int);  // raw-key constructor

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// Hash-combines a base seed with up to three indices into a new seed.
/// Used to give every (trial, member, purpose) tuple its own stream.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                          std::uint64_t b = 0, std::uint64_t c = 0);

}  // namespace epivar
