// Test-only generators and brute-force references.
#ifndef MDPP_TESTS_SUPPORT_HPP
#define MDPP_TESTS_SUPPORT_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "mdpp/kernel.hpp"
#include "mdpp/random.hpp"

namespace mdpp::testing {

inline double normal(RandomSource &rng) {
  // Box-Muller; only used to build test matrices
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline Matrix gaussian(Eigen::Index rows, Eigen::Index cols, RandomSource &rng) {
  Matrix g(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) g(i, j) = normal(rng);
  return g;
}

inline Matrix random_orthogonal(Eigen::Index n, RandomSource &rng) {
  Eigen::HouseholderQR<Matrix> qr(gaussian(n, n, rng));
  return qr.householderQ() * Matrix::Identity(n, n);
}

/// Symmetric matrix with exactly the given spectrum and random eigenvectors.
inline Matrix with_spectrum(const Vector &spectrum, RandomSource &rng) {
  const Matrix q = random_orthogonal(spectrum.size(), rng);
  Matrix a = q * spectrum.asDiagonal() * q.transpose();
  return 0.5 * (a + a.transpose());
}

/// Random L-ensemble with eigenvalues uniform in [low, high].
inline Kernel random_ensemble(Eigen::Index n, RandomSource &rng, double low = 0.05, double high = 3.0) {
  Vector spectrum(n);
  for (Eigen::Index i = 0; i < n; ++i) spectrum[i] = low + (high - low) * rng.uniform();
  return Kernel(with_spectrum(spectrum, rng), KernelForm::Ensemble);
}

/// Gram-type ensemble q_i phi_i.phi_j q_j with random unit features in R^dim.
inline Kernel random_gram_ensemble(Eigen::Index n, Eigen::Index dim, RandomSource &rng) {
  Matrix features = gaussian(n, dim, rng);
  features.rowwise().normalize();
  Vector quality(n);
  for (Eigen::Index i = 0; i < n; ++i) quality[i] = 0.5 + rng.uniform();
  return Kernel(quality.asDiagonal() * features * features.transpose() * quality.asDiagonal(),
                KernelForm::Ensemble);
}

inline double brute_determinant(const Matrix &a, const std::vector<std::size_t> &items) {
  return principal_submatrix(a, items).fullPivLu().determinant();
}

inline std::vector<std::size_t> bits(std::uint64_t mask, std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i)
    if (mask & (std::uint64_t{1} << i)) out.push_back(i);
  return out;
}

inline double max_abs(const Matrix &a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace mdpp::testing

#endif  // MDPP_TESTS_SUPPORT_HPP
