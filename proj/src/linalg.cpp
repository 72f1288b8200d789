#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mdpp/error.hpp"
#include "mdpp/kernel.hpp"

extern "C" void dsyevd_(const char *jobz, const char *uplo, const int *n, double *a,
                        const int *lda, double *w, double *work, const int *lwork,
                        int *iwork, const int *liwork, int *info);

namespace mdpp {

EigenDecomposition symmetric_eigen(const Matrix &a) {
  if (a.rows() != a.cols()) fail(ErrorKind::InvalidArgument, "eigensolve of a non-square matrix");
  const int n = static_cast<int>(a.rows());
  EigenDecomposition out;
  if (n == 0) {
    out.eigenvalues.resize(0);
    out.eigenvectors.resize(0, 0);
    return out;
  }

  Matrix work_matrix = a;
  Vector ascending(n);
  int info = 0;
  int lwork = -1;
  int liwork = -1;
  double work_query = 0.0;
  int iwork_query = 0;
  dsyevd_("V", "L", &n, work_matrix.data(), &n, ascending.data(), &work_query, &lwork,
          &iwork_query, &liwork, &info);
  lwork = static_cast<int>(work_query);
  liwork = iwork_query;
  std::vector<double> work(static_cast<std::size_t>(std::max(lwork, 1)));
  std::vector<int> iwork(static_cast<std::size_t>(std::max(liwork, 1)));
  dsyevd_("V", "L", &n, work_matrix.data(), &n, ascending.data(), work.data(), &lwork,
          iwork.data(), &liwork, &info);
  if (info != 0) fail(ErrorKind::NumericOverflow, "dsyevd failed to converge");

  // LAPACK returns ascending order
  out.eigenvalues = ascending.reverse();
  out.eigenvectors = work_matrix.rowwise().reverse();
  return out;
}

Matrix EigenDecomposition::reconstruct() const {
  return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
}

std::size_t numerical_rank(const Vector &eigenvalues) {
  if (eigenvalues.size() == 0) return 0;
  const double cutoff = 1e-10 * std::max(1.0, eigenvalues.maxCoeff());
  return static_cast<std::size_t>((eigenvalues.array() > cutoff).count());
}

Matrix principal_submatrix(const Matrix &a, std::span<const std::size_t> items) {
  const auto n = static_cast<Eigen::Index>(items.size());
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out(i, j) = a(items[i], items[j]);
  return out;
}

double log_det_psd(const Matrix &a) {
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  const auto n = a.rows();
  if (n == 0) return 0.0;

  Vector diag = a.diagonal();
  if ((diag.array() <= 0.0).any()) return neg_inf;
  const Vector scale = diag.array().rsqrt();
  const Matrix unit = scale.asDiagonal() * a * scale.asDiagonal();

  Eigen::LLT<Matrix> llt(unit);
  if (llt.info() != Eigen::Success) return neg_inf;
  const Vector pivots = llt.matrixLLT().diagonal();
  // pivot^2 is the squared sine between an item and the span of earlier ones
  if ((pivots.array().square() < 1e-12).any()) return neg_inf;
  return diag.array().log().sum() + 2.0 * pivots.array().log().sum();
}

}  // namespace mdpp
