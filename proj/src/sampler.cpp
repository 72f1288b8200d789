#include "mdpp/sampler.hpp"

#include <cmath>
#include <string>

#include "mdpp/error.hpp"

namespace mdpp {

namespace {

constexpr double kDropNorm = 1e-10;

void remove_column(Matrix &m, Eigen::Index col) {
  const Eigen::Index last = m.cols() - 1;
  if (col < last) m.middleCols(col, last - col) = m.rightCols(last - col).eval();
  m.conservativeResize(Eigen::NoChange, last);
}

std::size_t draw_item(const Matrix &basis, RandomSource &rng) {
  const Vector weights = basis.rowwise().squaredNorm();
  const double total = weights.sum();
  const double target = rng.uniform() * total;
  double cumulative = 0.0;
  Eigen::Index fallback = -1;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    cumulative += weights[i];
    fallback = i;
    if (cumulative > target) return static_cast<std::size_t>(i);
  }
  // round-off left target at or past the final cumulative sum
  return static_cast<std::size_t>(fallback);
}

void check_ground(const Kernel &l, const Subset &a) {
  if (a.ground_size() != l.size()) {
    fail(ErrorKind::InvalidArgument, "subset ground size " + std::to_string(a.ground_size()) +
                                         " does not match kernel size " + std::to_string(l.size()));
  }
}

}  // namespace

void project_out_item(Matrix &basis, std::size_t item) {
  const auto row = static_cast<Eigen::Index>(item);
  if (basis.cols() == 0) return;
  Eigen::Index pivot = 0;
  basis.row(row).cwiseAbs().maxCoeff(&pivot);  // first maximum wins ties
  const double pivot_value = basis(row, pivot);
  if (pivot_value == 0.0) return;

  const Vector pivot_col = basis.col(pivot);
  const Eigen::RowVectorXd factors = basis.row(row) / pivot_value;
  basis.noalias() -= pivot_col * factors;
  remove_column(basis, pivot);
  basis.row(row).setZero();

  Eigen::Index kept = 0;
  for (Eigen::Index c = 0; c < basis.cols(); ++c) {
    Vector v = basis.col(c);
    for (Eigen::Index q = 0; q < kept; ++q) v -= basis.col(q).dot(v) * basis.col(q);
    const double norm = v.norm();
    if (norm < kDropNorm) continue;
    basis.col(kept++) = v / norm;
  }
  basis.conservativeResize(Eigen::NoChange, kept);
}

Subset sample_from_basis(Matrix basis, RandomSource &rng) {
  const auto n = static_cast<std::size_t>(basis.rows());
  std::vector<std::size_t> picked;
  picked.reserve(static_cast<std::size_t>(basis.cols()));
  while (basis.cols() > 0) {
    const std::size_t item = draw_item(basis, rng);
    picked.push_back(item);
    project_out_item(basis, item);
  }
  return Subset(n, std::move(picked));
}

Subset sample_dpp(const EigenDecomposition &decomp, RandomSource &rng) {
  const auto n = static_cast<Eigen::Index>(decomp.size());
  std::vector<Eigen::Index> chosen;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lambda = decomp.eigenvalues[i];
    if (rng.uniform() < lambda / (lambda + 1.0)) chosen.push_back(i);
  }
  Matrix basis(n, static_cast<Eigen::Index>(chosen.size()));
  for (std::size_t c = 0; c < chosen.size(); ++c) basis.col(c) = decomp.eigenvectors.col(chosen[c]);
  return sample_from_basis(std::move(basis), rng);
}

Subset sample_dpp(const Kernel &l, RandomSource &rng) { return sample_dpp(l.eigen(), rng); }

Subset sample_kdpp(const EigenDecomposition &decomp, std::size_t k, RandomSource &rng) {
  const std::size_t n = decomp.size();
  const std::size_t rank = numerical_rank(decomp.eigenvalues);
  if (k > rank) {
    fail(ErrorKind::InfeasibleCardinality, "k-DPP of size " + std::to_string(k) +
                                               " requested from a kernel of numerical rank " +
                                               std::to_string(rank));
  }
  if (k == 0) return Subset(n);

  // k-DPPs are invariant to scaling L, so normalize to keep e_k finite
  const double top = decomp.eigenvalues.maxCoeff();
  const double cutoff = 1e-10 * std::max(1.0, top);
  Vector lambda = decomp.eigenvalues;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) lambda[i] = lambda[i] > cutoff ? lambda[i] / top : 0.0;
  const Matrix table = elementary_symmetric_table(lambda, k);

  std::vector<Eigen::Index> chosen;
  std::size_t remaining = k;
  for (std::size_t m = n; m >= 1 && remaining > 0; --m) {
    const double denom = table(remaining, m);
    const double accept = lambda[m - 1] * table(remaining - 1, m - 1) / denom;
    if (rng.uniform() < accept) {
      chosen.push_back(static_cast<Eigen::Index>(m - 1));
      --remaining;
    }
  }
  if (remaining != 0) {
    fail(ErrorKind::InfeasibleCardinality, "k-DPP eigenvector selection ran out of mass");
  }

  Matrix basis(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  for (std::size_t c = 0; c < k; ++c) basis.col(c) = decomp.eigenvectors.col(chosen[c]);
  return sample_from_basis(std::move(basis), rng);
}

Subset sample_kdpp(const Kernel &l, std::size_t k, RandomSource &rng) {
  return sample_kdpp(l.eigen(), k, rng);
}

double log_prob_dpp(const Kernel &l, const Subset &a) {
  check_ground(l, a);
  const double numerator = log_det_psd(principal_submatrix(l.entries(), a.indices()));
  const double normalizer = l.eigen().eigenvalues.array().log1p().sum();
  return numerator - normalizer;
}

double log_prob_kdpp(const Kernel &l, const Subset &a, std::size_t k) {
  check_ground(l, a);
  if (a.size() != k) {
    fail(ErrorKind::InvalidArgument, "k-DPP probability of a set of size " +
                                         std::to_string(a.size()) + " with k = " + std::to_string(k));
  }
  if (k > l.size()) fail(ErrorKind::InvalidArgument, "k exceeds ground set size");
  const double numerator = log_det_psd(principal_submatrix(l.entries(), a.indices()));
  if (std::isinf(numerator)) return numerator;
  return numerator - log_elementary_symmetric(l.eigen().eigenvalues, k);
}

}  // namespace mdpp
