#pragma once

#include <cstdint>
#include <random>

#include "ivla/matrix.hpp"

namespace ivla {

inline constexpr std::uint64_t kDefaultSeed = 42;

// Seeded 64-bit generator. Only raw engine output is used so that sequences
// are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = kDefaultSeed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    // Rejection sampling keeps the distribution exact.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

 private:
  std::mt19937_64 engine_;
};

// Entries uniform in [-1, 1).
Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng);
// random_matrix + rows * I: strictly diagonally dominant, safely invertible.
Matrix random_well_conditioned(std::size_t n, Rng& rng);
// Scales `a` so that its power-iteration spectral radius estimate equals
// `target` (50 iterations).
Matrix scale_to_spectral_radius(const Matrix& a, double target);
// Scales `a` to the given Frobenius norm.
Matrix scale_to_frobenius(const Matrix& a, double target);

}  // namespace ivla
