#ifndef MDPP_SCALED_HPP
#define MDPP_SCALED_HPP

#include <cstddef>
#include <span>

#include "mdpp/kernel.hpp"
#include "mdpp/random.hpp"

namespace mdpp {

/// Quality/diversity L-ensemble L = diag(q) Phi Phi^T diag(q) kept in
/// factored form. Qualities are stored as log q, so kernels whose quality
/// range is far wider than double precision can resolve remain exact.
///
/// Rows of Phi are normalized on construction and their norms folded into
/// log q; a zero row gives an item with no mass.
class ScaledKernel {
public:
  ScaledKernel(Vector log_quality, Matrix features);
  static ScaledKernel from_quality(const Vector &quality, const Matrix &features);

  std::size_t size() const { return static_cast<std::size_t>(log_quality_.size()); }
  const Vector &log_quality() const { return log_quality_; }
  const Matrix &features() const { return features_; }

  ScaledKernel principal(std::span<const std::size_t> items) const;

  /// Ensemble of Y \ A given Y ⊇ A, over the items of A.complement(). The
  /// features of the remaining items are projected off span{phi_a : a in A}.
  /// Throws IllConditioned if the phi_a are numerically dependent.
  ScaledKernel conditional(const Subset &given) const;

  /// Dense L with qualities rescaled so the largest is 1.
  Kernel dense() const;

private:
  Vector log_quality_;
  Matrix features_;
};

/// Exact k-DPP sample from a scaled kernel.
///
/// Items are ranked by quality and the sampler works on the shortest prefix
/// whose complement provably carries less than 1e-12 of the k-DPP mass. A
/// short prefix is decomposed by one-sided Jacobi, which keeps eigenvalues
/// accurate relative to their own size however graded the qualities are;
/// a long prefix (mild grading) uses the dense eigensolver. Throws
/// InfeasibleCardinality if fewer than k feature vectors are independent,
/// and DynamicRange if the prefix reaches items more than exp(700) below
/// the best one.
Subset sample_kdpp(const ScaledKernel &l, std::size_t k, RandomSource &rng);

}  // namespace mdpp

#endif  // MDPP_SCALED_HPP
