#include "ivla/random.hpp"

#include <cmath>

namespace ivla {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (double& x : m.data()) x = rng.uniform(-1.0, 1.0);
  return m;
}

Matrix random_well_conditioned(std::size_t n, Rng& rng) {
  Matrix m = random_matrix(n, n, rng);
  for (std::size_t i = 0; i < n; ++i) m(i, i) += static_cast<double>(n);
  return m;
}

Matrix scale_to_spectral_radius(const Matrix& a, double target) {
  // Geometric-mean growth of ||A^j x|| over 50 steps; robust to complex
  // dominant eigenvalue pairs where plain Rayleigh quotients oscillate.
  constexpr int kIterations = 50;
  const std::size_t n = a.rows();
  Matrix x(n, 1, 1.0 / std::sqrt(static_cast<double>(n)));
  CostLedger scratch;
  double log_growth = 0.0;
  for (int it = 0; it < kIterations; ++it) {
    x = mat_mul(a, x, scratch);
    const double norm = frobenius_norm(x);
    if (norm == 0.0) return a;
    log_growth += std::log(norm);
    for (double& v : x.data()) v /= norm;
  }
  const double radius = std::exp(log_growth / kIterations);
  return mat_scale(target / radius, a, scratch);
}

Matrix scale_to_frobenius(const Matrix& a, double target) {
  const double norm = frobenius_norm(a);
  if (norm == 0.0) return a;
  CostLedger scratch;
  return mat_scale(target / norm, a, scratch);
}

}  // namespace ivla
