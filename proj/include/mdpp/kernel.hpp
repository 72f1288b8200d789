#ifndef MDPP_KERNEL_HPP
#define MDPP_KERNEL_HPP

#include <compare>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mdpp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Eigenpairs of a symmetric matrix, eigenvalues in descending order.
struct EigenDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;  // column n pairs with eigenvalues[n]

  std::size_t size() const { return static_cast<std::size_t>(eigenvalues.size()); }
  Matrix reconstruct() const;
};

/// Symmetric eigensolve without any clamping.
EigenDecomposition symmetric_eigen(const Matrix &a);

/// Number of eigenvalues that are numerically nonzero, i.e. above
/// 1e-10 * max(1, largest eigenvalue).
std::size_t numerical_rank(const Vector &eigenvalues);

/// Sorted, duplicate-free set of indices into a ground set of size N.
class Subset {
public:
  Subset() = default;
  explicit Subset(std::size_t ground_size) : ground_size_(ground_size) {}
  /// Sorts `indices`; throws on duplicates or out-of-range entries.
  Subset(std::size_t ground_size, std::vector<std::size_t> indices);

  static Subset from_mask(std::size_t ground_size, std::uint64_t mask);
  static Subset full(std::size_t ground_size);

  std::size_t ground_size() const { return ground_size_; }
  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  std::span<const std::size_t> indices() const { return indices_; }
  std::size_t operator[](std::size_t pos) const { return indices_[pos]; }
  auto begin() const { return indices_.begin(); }
  auto end() const { return indices_.end(); }

  bool contains(std::size_t item) const;
  bool intersects(const Subset &other) const;
  std::uint64_t mask() const;  // requires ground_size <= 64
  Subset complement() const;
  Subset union_with(const Subset &other) const;

  /// Re-index a subset of a restricted ground set through `ground`, which
  /// lists the parent index of every restricted position.
  static Subset lift(const Subset &local, std::span<const std::size_t> ground,
                     std::size_t parent_size);

  friend bool operator==(const Subset &, const Subset &) = default;
  friend auto operator<=>(const Subset &a, const Subset &b) {
    if (auto c = a.ground_size_ <=> b.ground_size_; c != 0) return c;
    return a.indices_ <=> b.indices_;
  }

private:
  std::size_t ground_size_ = 0;
  std::vector<std::size_t> indices_;
};

enum class KernelForm { Marginal, Ensemble };

/// Symmetric PSD matrix tagged as a marginal kernel K or an L-ensemble.
///
/// The eigendecomposition is computed at most once and shared between
/// copies. Eigenvalues within 1e-8 below zero are clamped to zero; anything
/// more negative is rejected, as are marginal kernels with eigenvalues above
/// 1 + 1e-8.
class Kernel {
public:
  /// Validates symmetry (1e-10), PSD-ness and the marginal bound eagerly.
  Kernel(Matrix entries, KernelForm form);

  /// Wraps a matrix known to be PSD by construction. Symmetry is enforced by
  /// averaging with the transpose; the spectral checks run on first use of
  /// eigen().
  static Kernel trusted(Matrix entries, KernelForm form);

  const Matrix &entries() const { return entries_; }
  KernelForm form() const { return form_; }
  std::size_t size() const { return static_cast<std::size_t>(entries_.rows()); }

  const EigenDecomposition &eigen() const;
  double max_eigenvalue() const;
  std::size_t rank() const { return numerical_rank(eigen().eigenvalues); }

  Kernel principal(std::span<const std::size_t> items) const;

private:
  struct Cache;
  Kernel(Matrix entries, KernelForm form, std::shared_ptr<Cache> cache);
  static EigenDecomposition validated_eigen(const Matrix &entries, KernelForm form);

  friend Kernel with_mapped_eigenvalues(const Kernel &, KernelForm, Vector);

  Matrix entries_;
  KernelForm form_;
  std::shared_ptr<Cache> cache_;
};

Matrix principal_submatrix(const Matrix &a, std::span<const std::size_t> items);

/// log det of a PSD matrix, or -infinity when it is singular within
/// round-off. The matrix is equilibrated to unit diagonal first, so the
/// singularity test is scale-free.
double log_det_psd(const Matrix &a);

/// L_ij = q_i (phi_i . phi_j) q_j. Rows of `features` are the phi_i and must
/// have unit length within 1e-8.
Kernel build_ensemble(const Vector &quality, const Matrix &features);

/// K = L (I + L)^-1, computed in the eigenbasis of L.
Kernel marginal_from_ensemble(const Kernel &l);

/// L = K (I - K)^-1. Throws SingularKernel if an eigenvalue of K is within
/// 1e-10 of one.
Kernel ensemble_from_marginal(const Kernel &k);

/// Transition base of the Markov DPP, M = L (I - L)^-1. Throws
/// ChainUndefined unless every eigenvalue of L is below 1 - 1e-10.
Kernel markov_base(const Kernel &l);

/// L-ensemble of Y \ A given Y ⊇ A, over the items of A.complement():
///   L^A = ([(L + I_{Y\A})^-1]_{Y\A})^-1 - I
/// Throws IllConditioned if either symmetric solve has an (equilibrated)
/// condition estimate above 1e12.
Kernel conditional_ensemble(const Kernel &l, const Subset &given);

/// Marginal kernel of Y \ A given Y ⊇ A:  K^A = [I - (L + I_{Y\A})^-1]_{Y\A}
Kernel conditional_marginal(const Kernel &l, const Subset &given);

/// e_0..e_{k_max} of `values` by the two-index recursion
/// e_k^n = e_k^{n-1} + v_n e_{k-1}^{n-1}.
Vector elementary_symmetric(const Vector &values, std::size_t k_max);

/// Full recursion table, entry (k, n) = e_k over the first n values.
Matrix elementary_symmetric_table(const Vector &values, std::size_t k_max);

/// log e_k(values) for nonnegative values, scaled internally by the largest
/// value so large spectra do not overflow. Returns -infinity if e_k is 0.
double log_elementary_symmetric(const Vector &values, std::size_t k);

}  // namespace mdpp

#endif  // MDPP_KERNEL_HPP
