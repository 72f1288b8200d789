#include "mdpp/scaled.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "mdpp/error.hpp"
#include "mdpp/sampler.hpp"

extern "C" void dgejsv_(const char *joba, const char *jobu, const char *jobv, const char *jobr,
                        const char *jobt, const char *jobp, const int *m, const int *n, double *a,
                        const int *lda, double *sva, double *u, const int *ldu, double *v, const int *ldv,
                        double *work, const int *lwork, int *iwork, int *info);

namespace mdpp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kTailMass = 1e-12;
constexpr double kIndependent = 1e-8;  // residual norm of an independent unit feature
constexpr double kProjectedZero = 1e-12;
constexpr double kDependentRatio = 1e-6;
constexpr std::size_t kJacobiLimit = 160;
constexpr double kDenseGap = 1e-3;     // dense path needs lambda_k >= kDenseGap * lambda_1
constexpr double kLogRange = -700.0;  // exp of anything lower is not a normal double

struct Spectrum {
  Vector log_values;  // descending; squared singular values underflow long before their logs do
  Matrix vectors;
};

// Right singular pairs of a square matrix as log sigma^2, sorted
// descending. dgejsv pivots a QR factorization before one-sided Jacobi, so
// each singular value of B D keeps relative accuracy for any diagonal D and
// rank-deficient input converges.
Spectrum jacobi_squared(Matrix g) {
  const int n = static_cast<int>(g.cols());
  const int lwork = std::max(7, 6 * n + 2 * n * n) + 3 * n;
  int info = 0;
  Vector sva(g.cols());
  Matrix u(1, 1);
  Matrix v(g.cols(), g.cols());
  std::vector<double> work(static_cast<std::size_t>(lwork));
  std::vector<int> iwork(static_cast<std::size_t>(4 * n + 1));
  const int ldu = 1;
  dgejsv_("C", "N", "V", "N", "N", "N", &n, &n, g.data(), &n, sva.data(), u.data(), &ldu, v.data(), &n,
          work.data(), &lwork, iwork.data(), &info);
  if (info != 0) fail(ErrorKind::NumericOverflow, "dgejsv failed (info " + std::to_string(info) + ")");
  const double log_scale = std::log(work[0]) - std::log(work[1]);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return sva[a] > sva[b]; });
  Spectrum out{Vector(n), Matrix(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double sigma = sva[order[static_cast<std::size_t>(i)]];
    out.log_values[i] = sigma > 0.0 ? 2.0 * (log_scale + std::log(sigma)) : kNegInf;
    out.vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

// Eigenpairs of L = B B^T with B = diag(exp(s)) rows, rows sorted by
// decreasing s. With more features than items, G = R diag(exp(s)) for R the
// triangular factor of the feature rows is column scaled. Otherwise B is
// reduced by pivoted QR, B P = Q R, and L = Q (R R^T) Q^T; R^T inherits the
// grading of the sorted rows as column scaling.
Spectrum jacobi_spectrum(const Matrix &rows, const Vector &s) {
  const auto r = rows.rows();
  const auto d = rows.cols();
  if (d >= r) {
    Eigen::HouseholderQR<Matrix> qr(rows.transpose());
    Matrix g = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < r; ++j) g.col(j) *= std::exp(s[j]);
    return jacobi_squared(std::move(g));
  }
  const Matrix b = s.array().exp().matrix().asDiagonal() * rows;
  Eigen::ColPivHouseholderQR<Matrix> qr(b);
  const Matrix rt = qr.matrixR().topRows(d).triangularView<Eigen::Upper>().toDenseMatrix().transpose();
  Spectrum small = jacobi_squared(rt);
  const Matrix q = qr.householderQ() * Matrix::Identity(r, d);
  return Spectrum{std::move(small.log_values), q * small.vectors};
}

// Same selection as the dense k-DPP sampler, with the recursion carried in
// long double so widely spread spectra neither underflow nor overflow.
Subset sample_spectrum(const Spectrum &spectrum, std::size_t k, RandomSource &rng) {
  const auto n = static_cast<std::size_t>(spectrum.log_values.size());
  const double top = n ? spectrum.log_values.maxCoeff() : 0.0;
  std::vector<long double> lambda(n);
  std::size_t positive = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = spectrum.log_values[static_cast<Eigen::Index>(i)];
    lambda[i] = x == kNegInf ? 0.0L : std::exp(static_cast<long double>(x) - top);
    positive += lambda[i] > 0.0L;
  }
  if (positive < k)
    fail(ErrorKind::InfeasibleCardinality, "k-DPP of size " + std::to_string(k) + " requested from a kernel of rank " +
                                               std::to_string(positive));

  std::vector<std::vector<long double>> table(k + 1, std::vector<long double>(n + 1, 0.0L));
  std::fill(table[0].begin(), table[0].end(), 1.0L);
  for (std::size_t r = 1; r <= k; ++r)
    for (std::size_t m = 1; m <= n; ++m) table[r][m] = table[r][m - 1] + lambda[m - 1] * table[r - 1][m - 1];

  std::vector<Eigen::Index> chosen;
  std::size_t remaining = k;
  for (std::size_t m = n; m >= 1 && remaining > 0; --m) {
    const long double accept = lambda[m - 1] * table[remaining - 1][m - 1] / table[remaining][m];
    if (rng.uniform() < static_cast<double>(accept)) {
      chosen.push_back(static_cast<Eigen::Index>(m - 1));
      --remaining;
    }
  }
  if (remaining != 0) fail(ErrorKind::InfeasibleCardinality, "k-DPP eigenvector selection ran out of mass");

  Matrix basis(spectrum.vectors.rows(), static_cast<Eigen::Index>(k));
  for (std::size_t c = 0; c < k; ++c) basis.col(static_cast<Eigen::Index>(c)) = spectrum.vectors.col(chosen[c]);
  return sample_from_basis(std::move(basis), rng);
}

// log e_r of exp(x), long double internally.
double log_esp_of_exp(const std::vector<double> &x, std::size_t r) {
  if (r == 0) return 0.0;
  if (x.size() < r) return kNegInf;
  const double top = *std::max_element(x.begin(), x.end());
  std::vector<long double> e(r + 1, 0.0L);
  e[0] = 1.0L;
  for (double xi : x) {
    const long double v = std::exp(static_cast<long double>(xi - top));
    for (std::size_t j = r; j >= 1; --j) e[j] += v * e[j - 1];
  }
  if (!(e[r] > 0.0L)) return kNegInf;
  return static_cast<double>(std::log(e[r])) + static_cast<double>(r) * top;
}

}  // namespace

ScaledKernel::ScaledKernel(Vector log_quality, Matrix features)
    : log_quality_(std::move(log_quality)), features_(std::move(features)) {
  if (log_quality_.size() != features_.rows()) fail(ErrorKind::InvalidArgument, "quality and feature counts differ");
  for (Eigen::Index i = 0; i < log_quality_.size(); ++i) {
    const double lq = log_quality_[i];
    if (std::isnan(lq) || lq == std::numeric_limits<double>::infinity())
      fail(ErrorKind::InvalidArgument, "log quality " + std::to_string(i) + " is not a number below infinity");
    const double norm = features_.row(i).norm();
    if (!std::isfinite(norm)) fail(ErrorKind::InvalidArgument, "feature vector " + std::to_string(i) + " is not finite");
    if (norm == 0.0 || lq == kNegInf) {
      log_quality_[i] = kNegInf;
      features_.row(i).setZero();
      continue;
    }
    features_.row(i) /= norm;
    log_quality_[i] += std::log(norm);
  }
}

ScaledKernel ScaledKernel::from_quality(const Vector &quality, const Matrix &features) {
  for (Eigen::Index i = 0; i < quality.size(); ++i)
    if (!(quality[i] > 0.0) || !std::isfinite(quality[i]))
      fail(ErrorKind::InvalidArgument, "quality score " + std::to_string(i) + " is not positive");
  return ScaledKernel(quality.array().log().matrix(), features);
}

ScaledKernel ScaledKernel::principal(std::span<const std::size_t> items) const {
  Vector lq(static_cast<Eigen::Index>(items.size()));
  Matrix f(static_cast<Eigen::Index>(items.size()), features_.cols());
  for (std::size_t p = 0; p < items.size(); ++p) {
    if (items[p] >= size()) fail(ErrorKind::InvalidArgument, "item index out of range");
    lq[static_cast<Eigen::Index>(p)] = log_quality_[static_cast<Eigen::Index>(items[p])];
    f.row(static_cast<Eigen::Index>(p)) = features_.row(static_cast<Eigen::Index>(items[p]));
  }
  return ScaledKernel(std::move(lq), std::move(f));
}

ScaledKernel ScaledKernel::conditional(const Subset &given) const {
  if (given.ground_size() != size())
    fail(ErrorKind::InvalidArgument, "conditioning set does not match the kernel's ground set");
  if (given.empty()) return *this;
  const Subset rest = given.complement();
  const auto d = features_.cols();
  const auto a = static_cast<Eigen::Index>(given.size());
  if (a > d) fail(ErrorKind::IllConditioned, "conditioning set is larger than the feature dimension");

  Matrix fa(a, d);
  for (Eigen::Index p = 0; p < a; ++p) {
    const auto item = static_cast<Eigen::Index>(given[static_cast<std::size_t>(p)]);
    if (log_quality_[item] == kNegInf) fail(ErrorKind::IllConditioned, "conditioning set contains a massless item");
    fa.row(p) = features_.row(item);
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(fa.transpose());
  const Vector diag = qr.matrixQR().diagonal().cwiseAbs();
  if (diag.minCoeff() < kDependentRatio * diag.maxCoeff())
    fail(ErrorKind::IllConditioned, "conditioning set has nearly dependent feature vectors");
  const Matrix basis = qr.householderQ() * Matrix::Identity(d, a);

  const auto m = static_cast<Eigen::Index>(rest.size());
  Matrix fr(m, d);
  Vector lq(m);
  for (Eigen::Index p = 0; p < m; ++p) {
    const auto item = static_cast<Eigen::Index>(rest[static_cast<std::size_t>(p)]);
    fr.row(p) = features_.row(item);
    lq[p] = log_quality_[item];
  }
  // projected twice against cancellation
  for (int pass = 0; pass < 2; ++pass) fr -= (fr * basis) * basis.transpose();
  for (Eigen::Index p = 0; p < m; ++p)
    if (fr.row(p).norm() < kProjectedZero) fr.row(p).setZero();
  return ScaledKernel(std::move(lq), std::move(fr));
}

Kernel ScaledKernel::dense() const {
  const double top = size() ? log_quality_.maxCoeff() : 0.0;
  Matrix b = features_;
  for (Eigen::Index i = 0; i < b.rows(); ++i)
    b.row(i) *= log_quality_[i] == kNegInf ? 0.0 : std::exp(log_quality_[i] - top);
  return Kernel::trusted(b * b.transpose(), KernelForm::Ensemble);
}

Subset sample_kdpp(const ScaledKernel &l, std::size_t k, RandomSource &rng) {
  const std::size_t n = l.size();
  if (k > n)
    fail(ErrorKind::InfeasibleCardinality, "k = " + std::to_string(k) + " exceeds N = " + std::to_string(n));
  if (k == 0) return Subset(n);

  const Vector &lq = l.log_quality();
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < n; ++i)
    if (lq[static_cast<Eigen::Index>(i)] != kNegInf) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return lq[static_cast<Eigen::Index>(a)] > lq[static_cast<Eigen::Index>(b)];
  });
  const std::size_t m = order.size();
  if (m < k)
    fail(ErrorKind::InfeasibleCardinality, "only " + std::to_string(m) + " items carry mass, fewer than k = " +
                                               std::to_string(k));
  const double top = m ? lq[static_cast<Eigen::Index>(order[0])] : 0.0;
  Vector s(static_cast<Eigen::Index>(m));
  Matrix rows(static_cast<Eigen::Index>(m), l.features().cols());
  for (std::size_t p = 0; p < m; ++p) {
    s[static_cast<Eigen::Index>(p)] = lq[static_cast<Eigen::Index>(order[p])] - top;
    rows.row(static_cast<Eigen::Index>(p)) = l.features().row(static_cast<Eigen::Index>(order[p]));
  }

  // greedy k-set: log det(L_Y) bounds log e_k(L) from below
  Matrix residual = rows;
  Vector norm2 = residual.rowwise().squaredNorm();
  std::vector<bool> used(m, false);
  double log_det = 0.0;
  std::size_t deepest = 0;
  for (std::size_t pick = 0; pick < k; ++pick) {
    std::size_t best = m;
    double best_score = kNegInf;
    for (std::size_t p = 0; p < m; ++p) {
      const double r2 = norm2[static_cast<Eigen::Index>(p)];
      if (used[p] || r2 <= kIndependent * kIndependent) continue;
      const double score = 2.0 * s[static_cast<Eigen::Index>(p)] + std::log(r2);
      if (score > best_score) {
        best_score = score;
        best = p;
      }
    }
    if (best == m)
      fail(ErrorKind::InfeasibleCardinality, "k-DPP of size " + std::to_string(k) +
                                                 " requested from a kernel of rank " + std::to_string(pick));
    used[best] = true;
    log_det += best_score;
    deepest = std::max(deepest, best);
    const Vector u = residual.row(static_cast<Eigen::Index>(best)).transpose() /
                     std::sqrt(norm2[static_cast<Eigen::Index>(best)]);
    residual -= (residual * u) * u.transpose();
    norm2 = residual.rowwise().squaredNorm();
  }

  // P(Y meets the tail) <= sum_tail q_j^2 * e_{k-1}(q^2) / e_k(L)
  std::vector<double> two_s(m);
  for (std::size_t p = 0; p < m; ++p) two_s[p] = 2.0 * s[static_cast<Eigen::Index>(p)];
  const double log_ratio = log_esp_of_exp(two_s, k - 1) - log_det;
  std::vector<double> log_tail(m + 1, kNegInf);
  for (std::size_t p = m; p-- > 0;) {
    const double a = std::max(log_tail[p + 1], two_s[p]);
    const double b = std::min(log_tail[p + 1], two_s[p]);
    log_tail[p] = b == kNegInf ? a : a + std::log1p(std::exp(b - a));
  }
  std::size_t r = deepest + 1;
  while (r < m && log_tail[r] + log_ratio > std::log(kTailMass)) ++r;

  if (s[static_cast<Eigen::Index>(r - 1)] < kLogRange)
    fail(ErrorKind::DynamicRange, "k-DPP sample needs items whose quality is below exp(" +
                                      std::to_string(kLogRange) + ") relative to the best item");
  const Matrix head_rows = rows.topRows(static_cast<Eigen::Index>(r));
  const Vector head_s = s.head(static_cast<Eigen::Index>(r));
  const std::span<const std::size_t> head(order.data(), r);
  if (r > kJacobiLimit) {
    Matrix b = head_rows;
    for (Eigen::Index i = 0; i < b.rows(); ++i) b.row(i) *= std::exp(head_s[i]);
    const EigenDecomposition decomp = symmetric_eigen(b * b.transpose());
    if (decomp.eigenvalues[static_cast<Eigen::Index>(k - 1)] >= kDenseGap * decomp.eigenvalues[0])
      return Subset::lift(sample_kdpp(decomp, k, rng), head, n);
  }
  return Subset::lift(sample_spectrum(jacobi_spectrum(head_rows, head_s), k, rng), head, n);
}

}  // namespace mdpp
