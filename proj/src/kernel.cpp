#include "mdpp/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <string>

#include "mdpp/error.hpp"

namespace mdpp {

namespace {

constexpr double kSymmetryTol = 1e-10;
constexpr double kNegativeEigenTol = 1e-8;
constexpr double kUnitBoundTol = 1e-8;
constexpr double kInverseGap = 1e-10;
constexpr double kMaxCondition = 1e12;

Matrix symmetrized(const Matrix &a) { return 0.5 * (a + a.transpose()); }

/// Inverse of an SPD matrix after scaling it to unit diagonal. `step` names
/// the intermediate in the error raised when the condition estimate exceeds
/// kMaxCondition.
Matrix equilibrated_inverse(const Matrix &a, const char *step) {
  const Vector diag = a.diagonal();
  if ((diag.array() <= 0.0).any() || !diag.allFinite()) {
    fail(ErrorKind::IllConditioned,
         std::string("conditioning step '") + step + "': nonpositive diagonal");
  }
  const Vector scale = diag.array().rsqrt();
  const Matrix unit = scale.asDiagonal() * a * scale.asDiagonal();
  Eigen::LDLT<Matrix> ldlt(unit);
  const double rcond = ldlt.info() == Eigen::Success ? ldlt.rcond() : 0.0;
  if (!(rcond > 1.0 / kMaxCondition)) {
    std::ostringstream msg;
    msg << "conditioning step '" << step << "': condition estimate "
        << (rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity())
        << " exceeds " << kMaxCondition;
    fail(ErrorKind::IllConditioned, msg.str());
  }
  const Matrix inv_unit = ldlt.solve(Matrix::Identity(a.rows(), a.cols()));
  return symmetrized(scale.asDiagonal() * inv_unit * scale.asDiagonal());
}

/// [(L + I_rest)^-1]_rest, the block shared by both conditional kernels.
Matrix conditional_block(const Kernel &l, const Subset &rest) {
  Matrix shifted = l.entries();
  for (std::size_t i : rest) shifted(i, i) += 1.0;
  const Matrix inverse = equilibrated_inverse(shifted, "(L + I_{Y\\A})^-1");
  return principal_submatrix(inverse, rest.indices());
}

void require_form(const Kernel &k, KernelForm form, const char *op) {
  if (k.form() != form) {
    fail(ErrorKind::InvalidArgument,
         std::string(op) + ": expected " +
             (form == KernelForm::Ensemble ? "an L-ensemble" : "a marginal") + " kernel");
  }
}

void require_conditioning_set(const Kernel &l, const Subset &given) {
  if (given.ground_size() != l.size()) {
    fail(ErrorKind::InvalidArgument, "conditioning set ground size does not match kernel");
  }
}

}  // namespace

// ---------------------------------------------------------------- Subset

Subset::Subset(std::size_t ground_size, std::vector<std::size_t> indices)
    : ground_size_(ground_size), indices_(std::move(indices)) {
  std::sort(indices_.begin(), indices_.end());
  if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end()) {
    fail(ErrorKind::InvalidArgument, "subset contains duplicate indices");
  }
  if (!indices_.empty() && indices_.back() >= ground_size_) {
    fail(ErrorKind::InvalidArgument, "subset index " + std::to_string(indices_.back()) +
                                         " outside ground set of size " +
                                         std::to_string(ground_size_));
  }
}

Subset Subset::from_mask(std::size_t ground_size, std::uint64_t mask) {
  if (ground_size > 64) fail(ErrorKind::InvalidArgument, "bitmask subsets need N <= 64");
  if (ground_size < 64 && (mask >> ground_size) != 0) {
    fail(ErrorKind::InvalidArgument, "bitmask has bits outside the ground set");
  }
  Subset out(ground_size);
  for (std::size_t i = 0; i < ground_size; ++i)
    if (mask & (std::uint64_t{1} << i)) out.indices_.push_back(i);
  return out;
}

Subset Subset::full(std::size_t ground_size) {
  Subset out(ground_size);
  out.indices_.resize(ground_size);
  for (std::size_t i = 0; i < ground_size; ++i) out.indices_[i] = i;
  return out;
}

bool Subset::contains(std::size_t item) const {
  return std::binary_search(indices_.begin(), indices_.end(), item);
}

bool Subset::intersects(const Subset &other) const {
  auto a = indices_.begin();
  auto b = other.indices_.begin();
  while (a != indices_.end() && b != other.indices_.end()) {
    if (*a == *b) return true;
    if (*a < *b) ++a;
    else ++b;
  }
  return false;
}

std::uint64_t Subset::mask() const {
  if (ground_size_ > 64) fail(ErrorKind::InvalidArgument, "bitmask subsets need N <= 64");
  std::uint64_t m = 0;
  for (std::size_t i : indices_) m |= std::uint64_t{1} << i;
  return m;
}

Subset Subset::complement() const {
  Subset out(ground_size_);
  out.indices_.reserve(ground_size_ - indices_.size());
  auto it = indices_.begin();
  for (std::size_t i = 0; i < ground_size_; ++i) {
    if (it != indices_.end() && *it == i) ++it;
    else out.indices_.push_back(i);
  }
  return out;
}

Subset Subset::union_with(const Subset &other) const {
  if (other.ground_size_ != ground_size_) {
    fail(ErrorKind::InvalidArgument, "union of subsets over different ground sets");
  }
  Subset out(ground_size_);
  std::set_union(indices_.begin(), indices_.end(), other.indices_.begin(),
                 other.indices_.end(), std::back_inserter(out.indices_));
  return out;
}

Subset Subset::lift(const Subset &local, std::span<const std::size_t> ground,
                    std::size_t parent_size) {
  if (local.ground_size() != ground.size()) {
    fail(ErrorKind::InvalidArgument, "lift: local ground size does not match index map");
  }
  std::vector<std::size_t> parent;
  parent.reserve(local.size());
  for (std::size_t i : local) parent.push_back(ground[i]);
  return Subset(parent_size, std::move(parent));
}

// ---------------------------------------------------------------- Kernel

struct Kernel::Cache {
  std::once_flag once;
  std::shared_ptr<const EigenDecomposition> eigen;
};

Kernel::Kernel(Matrix entries, KernelForm form, std::shared_ptr<Cache> cache)
    : entries_(std::move(entries)), form_(form), cache_(std::move(cache)) {}

Kernel::Kernel(Matrix entries, KernelForm form)
    : form_(form), cache_(std::make_shared<Cache>()) {
  if (entries.rows() != entries.cols()) fail(ErrorKind::InvalidArgument, "kernel must be square");
  if (!entries.allFinite()) fail(ErrorKind::InvalidArgument, "kernel has non-finite entries");
  const double scale = std::max(1.0, entries.size() ? entries.cwiseAbs().maxCoeff() : 0.0);
  const double asym = entries.size() ? (entries - entries.transpose()).cwiseAbs().maxCoeff() : 0.0;
  if (asym > kSymmetryTol * scale) {
    std::ostringstream msg;
    msg << "kernel asymmetry " << asym << " exceeds " << kSymmetryTol;
    fail(ErrorKind::InvalidArgument, msg.str());
  }
  entries_ = symmetrized(entries);
  auto decomposition = std::make_shared<const EigenDecomposition>(validated_eigen(entries_, form));
  std::call_once(cache_->once, [&] { cache_->eigen = std::move(decomposition); });
}

Kernel Kernel::trusted(Matrix entries, KernelForm form) {
  if (entries.rows() != entries.cols()) fail(ErrorKind::InvalidArgument, "kernel must be square");
  return Kernel(symmetrized(entries), form, std::make_shared<Cache>());
}

EigenDecomposition Kernel::validated_eigen(const Matrix &entries, KernelForm form) {
  EigenDecomposition eig = symmetric_eigen(entries);
  if (eig.size() == 0) return eig;
  const double top = eig.eigenvalues.maxCoeff();
  const double tol = kNegativeEigenTol * std::max(1.0, std::abs(top));
  const double bottom = eig.eigenvalues.minCoeff();
  if (bottom < -tol) {
    std::ostringstream msg;
    msg << "kernel is not positive semidefinite (smallest eigenvalue " << bottom << ")";
    fail(ErrorKind::InvalidArgument, msg.str());
  }
  eig.eigenvalues = eig.eigenvalues.cwiseMax(0.0);
  if (form == KernelForm::Marginal && top > 1.0 + kUnitBoundTol) {
    std::ostringstream msg;
    msg << "marginal kernel eigenvalue " << top << " exceeds 1";
    fail(ErrorKind::InvalidArgument, msg.str());
  }
  return eig;
}

const EigenDecomposition &Kernel::eigen() const {
  std::call_once(cache_->once, [this] {
    cache_->eigen = std::make_shared<const EigenDecomposition>(validated_eigen(entries_, form_));
  });
  return *cache_->eigen;
}

double Kernel::max_eigenvalue() const {
  const auto &values = eigen().eigenvalues;
  return values.size() ? values[0] : 0.0;
}

Kernel Kernel::principal(std::span<const std::size_t> items) const {
  return trusted(principal_submatrix(entries_, items), form_);
}

Kernel with_mapped_eigenvalues(const Kernel &source, KernelForm form, Vector values) {
  const auto &eig = source.eigen();
  auto cache = std::make_shared<Kernel::Cache>();
  Matrix entries = symmetrized(eig.eigenvectors * values.asDiagonal() * eig.eigenvectors.transpose());
  auto decomposition =
      std::make_shared<const EigenDecomposition>(EigenDecomposition{std::move(values), eig.eigenvectors});
  std::call_once(cache->once, [&] { cache->eigen = std::move(decomposition); });
  return Kernel(std::move(entries), form, std::move(cache));
}

// ------------------------------------------------------------ operations

Kernel build_ensemble(const Vector &quality, const Matrix &features) {
  if (quality.size() != features.rows()) {
    fail(ErrorKind::InvalidArgument, "quality and feature counts differ");
  }
  for (Eigen::Index i = 0; i < quality.size(); ++i) {
    if (!(quality[i] > 0.0) || !std::isfinite(quality[i])) {
      fail(ErrorKind::InvalidArgument, "quality score " + std::to_string(i) + " is not positive");
    }
    const double norm = features.row(i).norm();
    if (std::abs(norm - 1.0) > 1e-8) {
      fail(ErrorKind::InvalidArgument, "feature vector " + std::to_string(i) +
                                           " is not unit length (norm " + std::to_string(norm) + ")");
    }
  }
  Matrix gram = features * features.transpose();
  Matrix entries = quality.asDiagonal() * gram * quality.asDiagonal();
  return Kernel::trusted(std::move(entries), KernelForm::Ensemble);
}

Kernel marginal_from_ensemble(const Kernel &l) {
  require_form(l, KernelForm::Ensemble, "marginal_from_ensemble");
  const Vector &lambda = l.eigen().eigenvalues;
  return with_mapped_eigenvalues(l, KernelForm::Marginal,
                                 lambda.array() / (1.0 + lambda.array()));
}

Kernel ensemble_from_marginal(const Kernel &k) {
  require_form(k, KernelForm::Marginal, "ensemble_from_marginal");
  const Vector &lambda = k.eigen().eigenvalues;
  if (lambda.size() && lambda[0] >= 1.0 - kInverseGap) {
    std::ostringstream msg;
    msg << "marginal kernel eigenvalue " << lambda[0] << " too close to 1; I - K is singular";
    fail(ErrorKind::SingularKernel, msg.str());
  }
  return with_mapped_eigenvalues(k, KernelForm::Ensemble,
                                 lambda.array() / (1.0 - lambda.array()));
}

Kernel markov_base(const Kernel &l) {
  require_form(l, KernelForm::Ensemble, "markov_base");
  const Vector &lambda = l.eigen().eigenvalues;
  if (lambda.size() && lambda[0] >= 1.0 - kInverseGap) {
    std::ostringstream msg;
    msg << "Markov DPP undefined: largest L eigenvalue " << lambda[0]
        << " is not below 1 (equivalently K is not below I/2)";
    fail(ErrorKind::ChainUndefined, msg.str());
  }
  return with_mapped_eigenvalues(l, KernelForm::Ensemble,
                                 lambda.array() / (1.0 - lambda.array()));
}

Kernel conditional_ensemble(const Kernel &l, const Subset &given) {
  require_form(l, KernelForm::Ensemble, "conditional_ensemble");
  require_conditioning_set(l, given);
  if (given.empty()) return l;
  const Subset rest = given.complement();
  if (rest.empty()) return Kernel::trusted(Matrix(0, 0), KernelForm::Ensemble);

  const Matrix block = conditional_block(l, rest);
  Matrix result = equilibrated_inverse(block, "[(L + I_{Y\\A})^-1]_{Y\\A}");
  result.diagonal().array() -= 1.0;
  return Kernel::trusted(std::move(result), KernelForm::Ensemble);
}

Kernel conditional_marginal(const Kernel &l, const Subset &given) {
  require_form(l, KernelForm::Ensemble, "conditional_marginal");
  require_conditioning_set(l, given);
  if (given.empty()) return marginal_from_ensemble(l);
  const Subset rest = given.complement();
  if (rest.empty()) return Kernel::trusted(Matrix(0, 0), KernelForm::Marginal);

  const Matrix block = conditional_block(l, rest);
  Matrix result = Matrix::Identity(block.rows(), block.cols()) - block;
  return Kernel::trusted(std::move(result), KernelForm::Marginal);
}

Matrix elementary_symmetric_table(const Vector &values, std::size_t k_max) {
  const auto n = static_cast<std::size_t>(values.size());
  if (k_max > n) {
    fail(ErrorKind::InvalidArgument, "elementary_symmetric: k_max " + std::to_string(k_max) +
                                         " exceeds N = " + std::to_string(n));
  }
  Matrix table = Matrix::Zero(static_cast<Eigen::Index>(k_max + 1), static_cast<Eigen::Index>(n + 1));
  table.row(0).setOnes();
  for (std::size_t k = 1; k <= k_max; ++k) {
    for (std::size_t j = 1; j <= n; ++j) {
      table(k, j) = table(k, j - 1) + values[j - 1] * table(k - 1, j - 1);
    }
  }
  if (!table.allFinite()) {
    fail(ErrorKind::NumericOverflow, "elementary symmetric polynomial overflowed");
  }
  return table;
}

Vector elementary_symmetric(const Vector &values, std::size_t k_max) {
  const auto n = static_cast<std::size_t>(values.size());
  if (k_max > n) {
    fail(ErrorKind::InvalidArgument, "elementary_symmetric: k_max " + std::to_string(k_max) +
                                         " exceeds N = " + std::to_string(n));
  }
  Vector e = Vector::Zero(static_cast<Eigen::Index>(k_max + 1));
  e[0] = 1.0;
  for (std::size_t j = 1; j <= n; ++j) {
    for (std::size_t k = std::min(j, k_max); k >= 1; --k) e[k] += values[j - 1] * e[k - 1];
  }
  if (!e.allFinite()) fail(ErrorKind::NumericOverflow, "elementary symmetric polynomial overflowed");
  return e;
}

double log_elementary_symmetric(const Vector &values, std::size_t k) {
  if (k == 0) return 0.0;
  if (k > static_cast<std::size_t>(values.size())) return -std::numeric_limits<double>::infinity();
  const double top = values.maxCoeff();
  if (!(top > 0.0)) return -std::numeric_limits<double>::infinity();
  const Vector e = elementary_symmetric(values / top, k);
  if (!(e[k] > 0.0)) return -std::numeric_limits<double>::infinity();
  return std::log(e[k]) + static_cast<double>(k) * std::log(top);
}

}  // namespace mdpp
