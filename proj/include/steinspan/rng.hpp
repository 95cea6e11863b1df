#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace steinspan {

// Deterministic random source. All variate transforms are implemented here
// instead of relying on <random> distribution classes, whose output sequences
// are implementation-defined; this keeps seeded runs bit-identical.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform on (0, 1), 53-bit resolution, never exactly zero.
  double uniform();

  // Standard normal via the Marsaglia polar method (one spare cached).
  double normal();

  // Gamma(shape, scale) via Marsaglia-Tsang squeeze; shape boosting below 1.
  double gamma(double shape, double scale);

  double chi_squared(double dof) { return gamma(0.5 * dof, 2.0); }

  // Uniform integer in [0, n), rejection-corrected.
  int uniform_int(int n);

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stable child-seed derivation: FNV-1a over the tag bytes mixed with the
// master seed and index through a splitmix64 finalizer. Used to give every
// (grid point, repetition) its own independent stream.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::uint64_t index);

}  // namespace steinspan
