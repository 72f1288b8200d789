#include <doctest.h>

#include <bit>
#include <cmath>

#include "mdpp/error.hpp"
#include "mdpp/kernel.hpp"
#include "support.hpp"

using namespace mdpp;
using namespace mdpp::testing;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto &row : rows) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

ErrorKind kind_of(auto &&fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.kind();
  }
  FAIL("expected an mdpp::Error");
  return ErrorKind::Io;
}

}  // namespace

TEST_SUITE("kernel") {

TEST_CASE("subset keeps indices sorted and rejects bad input") {
  Subset s(5, {3, 0, 4});
  CHECK(std::vector<std::size_t>(s.begin(), s.end()) == std::vector<std::size_t>{0, 3, 4});
  CHECK(s.contains(3));
  CHECK_FALSE(s.contains(1));
  CHECK(s.complement() == Subset(5, {1, 2}));
  CHECK(s.mask() == 0b11001);
  CHECK(Subset::from_mask(5, 0b11001) == s);
  CHECK(kind_of([] { Subset(3, {1, 1}); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { Subset(3, {3}); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("kernel validation") {
  CHECK(kind_of([] { Kernel(mat({{1, 0.5}, {0.4, 1}}), KernelForm::Ensemble); }) ==
        ErrorKind::InvalidArgument);
  CHECK(kind_of([] { Kernel(mat({{1, 2}, {2, 1}}), KernelForm::Ensemble); }) ==
        ErrorKind::InvalidArgument);  // eigenvalue -1
  CHECK(kind_of([] { Kernel(mat({{1.5}}), KernelForm::Marginal); }) == ErrorKind::InvalidArgument);
  // round-off negativity is clamped
  Kernel ok(mat({{1, 1}, {1, 1 - 1e-12}}), KernelForm::Ensemble);
  CHECK(ok.eigen().eigenvalues.minCoeff() >= 0.0);
}

TEST_CASE("eigendecomposition reconstructs and is orthonormal") {
  RandomSource rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const Kernel l = random_ensemble(9, rng);
    const auto &eig = l.eigen();
    CHECK(max_abs(eig.reconstruct() - l.entries()) <= 1e-8 * (1 + max_abs(l.entries())));
    CHECK(max_abs(eig.eigenvectors.transpose() * eig.eigenvectors - Matrix::Identity(9, 9)) <= 1e-10);
    for (Eigen::Index i = 1; i < 9; ++i) CHECK(eig.eigenvalues[i - 1] >= eig.eigenvalues[i]);
  }
}

TEST_CASE("build_ensemble") {
  SUBCASE("identical items give a rank-one kernel") {
    const Kernel l = build_ensemble(Vector::Ones(2), mat({{1, 0}, {1, 0}}));
    CHECK(max_abs(l.entries() - mat({{1, 1}, {1, 1}})) == 0.0);
    CHECK(l.rank() == 1);
  }
  SUBCASE("orthogonal features give a diagonal kernel") {
    Vector q(2);
    q << 2, 3;
    const Kernel l = build_ensemble(q, mat({{1, 0}, {0, 1}}));
    CHECK(max_abs(l.entries() - mat({{4, 0}, {0, 9}})) == 0.0);
  }
  SUBCASE("random Gram kernels are PSD") {
    RandomSource rng(3);
    for (int trial = 0; trial < 10; ++trial) {
      Matrix phi = gaussian(6, 4, rng);
      phi.rowwise().normalize();
      Vector q = Vector::Constant(6, 0.2) + Vector::Ones(6) * rng.uniform();
      const Kernel l = build_ensemble(q, phi);
      CHECK(symmetric_eigen(l.entries()).eigenvalues.minCoeff() >= -1e-10);
    }
  }
  SUBCASE("errors") {
    CHECK(kind_of([] { build_ensemble(Vector::Zero(1), mat({{1}})); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([] { build_ensemble(Vector::Ones(1), mat({{0.5}})); }) == ErrorKind::InvalidArgument);
  }
}

TEST_CASE("marginal_from_ensemble") {
  CHECK(marginal_from_ensemble(Kernel(mat({{3}}), KernelForm::Ensemble)).entries()(0, 0) ==
        doctest::Approx(0.75).epsilon(1e-14));
  CHECK(max_abs(marginal_from_ensemble(Kernel(Matrix::Identity(2, 2), KernelForm::Ensemble)).entries() -
                0.5 * Matrix::Identity(2, 2)) <= 1e-14);

  RandomSource rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Kernel l = random_ensemble(6, rng);
    const Kernel k = marginal_from_ensemble(l);
    CHECK(k.form() == KernelForm::Marginal);
    // direct solve K = L (I + L)^-1, independent of the eigenvalue map
    const Matrix direct = (Matrix::Identity(6, 6) + l.entries()).partialPivLu().solve(l.entries());
    CHECK(max_abs(direct - k.entries()) <= 1e-10);
    CHECK(k.eigen().eigenvalues.maxCoeff() < 1.0);
  }
}

TEST_CASE("ensemble_from_marginal") {
  CHECK(ensemble_from_marginal(Kernel(mat({{0.75}}), KernelForm::Marginal)).entries()(0, 0) ==
        doctest::Approx(3.0).epsilon(1e-12));
  CHECK(kind_of([] { ensemble_from_marginal(Kernel(mat({{1.0}}), KernelForm::Marginal)); }) ==
        ErrorKind::SingularKernel);

  RandomSource rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    Vector spectrum(6);
    for (Eigen::Index i = 0; i < 6; ++i) spectrum[i] = 0.9 * rng.uniform();
    const Kernel k(with_spectrum(spectrum, rng), KernelForm::Marginal);
    const Kernel round = marginal_from_ensemble(ensemble_from_marginal(k));
    CHECK(max_abs(round.entries() - k.entries()) < 1e-8);
  }
}

TEST_CASE("markov_base") {
  CHECK(markov_base(Kernel(mat({{0.5}}), KernelForm::Ensemble)).entries()(0, 0) ==
        doctest::Approx(1.0).epsilon(1e-14));
  CHECK(max_abs(markov_base(Kernel(mat({{0.5, 0}, {0, 0.2}}), KernelForm::Ensemble)).entries() -
                mat({{1.0, 0}, {0, 0.25}})) <= 1e-14);
  CHECK(kind_of([] { markov_base(Kernel(mat({{1.0}}), KernelForm::Ensemble)); }) ==
        ErrorKind::ChainUndefined);
  CHECK(kind_of([] { markov_base(Kernel(mat({{1.2}}), KernelForm::Ensemble)); }) ==
        ErrorKind::ChainUndefined);

  SUBCASE("union marginal kernel identity 2M(2M+I)^-1 = 2K") {
    RandomSource rng(21);
    for (int trial = 0; trial < 20; ++trial) {
      Vector spectrum(6);
      for (Eigen::Index i = 0; i < 6; ++i) spectrum[i] = 0.95 * rng.uniform();
      spectrum[0] = trial % 2 ? 0.95 : 0.9;
      const Kernel l(with_spectrum(spectrum, rng), KernelForm::Ensemble);
      const Matrix two_m = 2.0 * markov_base(l).entries();
      const Matrix lhs = (two_m + Matrix::Identity(6, 6)).partialPivLu().solve(two_m);
      CHECK(max_abs(lhs - 2.0 * marginal_from_ensemble(l).entries()) <= 1e-8);
      CHECK(markov_base(l).eigen().eigenvalues.minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("conditional_ensemble") {
  SUBCASE("diagonal kernels leave other items untouched") {
    const Kernel l(Matrix::Identity(2, 2), KernelForm::Ensemble);
    const Kernel c = conditional_ensemble(l, Subset(2, {0}));
    REQUIRE(c.size() == 1);
    CHECK(c.entries()(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("empty conditioning is the identity map") {
    RandomSource rng(4);
    const Kernel l = random_ensemble(5, rng);
    CHECK(max_abs(conditional_ensemble(l, Subset(5)).entries() - l.entries()) <= 1e-10);
  }
  SUBCASE("conditioning on everything leaves an empty kernel") {
    const Kernel l(Matrix::Identity(2, 2), KernelForm::Ensemble);
    CHECK(conditional_ensemble(l, Subset::full(2)).size() == 0);
  }
  SUBCASE("agrees with the Schur complement L_rr - L_ra L_a^-1 L_ar") {
    RandomSource rng(12);
    for (int trial = 0; trial < 10; ++trial) {
      const Kernel l = random_gram_ensemble(8, 8, rng);
      const Subset a(8, {1, 4, 6});
      const Subset rest = a.complement();
      Matrix l_aa = principal_submatrix(l.entries(), a.indices());
      Matrix l_ra(static_cast<Eigen::Index>(rest.size()), static_cast<Eigen::Index>(a.size()));
      for (std::size_t i = 0; i < rest.size(); ++i)
        for (std::size_t j = 0; j < a.size(); ++j) l_ra(i, j) = l.entries()(rest[i], a[j]);
      const Matrix schur = principal_submatrix(l.entries(), rest.indices()) -
                           l_ra * l_aa.ldlt().solve(l_ra.transpose());
      CHECK(max_abs(conditional_ensemble(l, a).entries() - schur) <= 1e-9);
    }
  }
  SUBCASE("conditional probabilities match brute-force enumeration") {
    RandomSource rng(31);
    for (int trial = 0; trial < 5; ++trial) {
      const Kernel l = random_ensemble(6, rng);
      const Subset a(6, {std::size_t(trial % 6), std::size_t((trial + 2) % 6)});
      const Subset rest = a.complement();
      const Kernel la = conditional_ensemble(l, a);
      const double norm = (Matrix::Identity(4, 4) + la.entries()).determinant();
      // P(Y = A ∪ B | Y ⊇ A) by summing over every superset of A
      double superset_mass = 0.0;
      for (std::uint64_t mask = 0; mask < 64; ++mask)
        if ((mask & a.mask()) == a.mask()) superset_mass += brute_determinant(l.entries(), bits(mask, 6));
      for (std::uint64_t local = 0; local < 16; ++local) {
        std::vector<std::size_t> joint(a.begin(), a.end());
        std::vector<std::size_t> local_items;
        for (std::size_t i = 0; i < 4; ++i)
          if (local & (1u << i)) {
            joint.push_back(rest[i]);
            local_items.push_back(i);
          }
        const double expected = brute_determinant(l.entries(), joint) / superset_mass;
        const double got = brute_determinant(la.entries(), local_items) / norm;
        CHECK(std::abs(expected - got) <= 1e-8);
      }
    }
  }
  SUBCASE("ill-conditioned conditioning fails loudly") {
    // items 0 and 1 are identical, so L_{01} is singular
    const Kernel l = build_ensemble(Vector::Ones(3), mat({{1, 0}, {1, 0}, {0, 1}}));
    CHECK(kind_of([&] { conditional_ensemble(l, Subset(3, {0, 1})); }) == ErrorKind::IllConditioned);
  }
}

TEST_CASE("conditional_marginal") {
  RandomSource rng(41);
  const Kernel l = random_ensemble(6, rng);
  CHECK(max_abs(conditional_marginal(l, Subset(6)).entries() - marginal_from_ensemble(l).entries()) <= 1e-10);
  CHECK(conditional_marginal(Kernel(Matrix::Identity(2, 2), KernelForm::Ensemble), Subset(2, {0}))
            .entries()(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  for (std::size_t item = 0; item < 6; ++item) {
    const Subset a(6, {item});
    CHECK(max_abs(conditional_marginal(l, a).entries() -
                  marginal_from_ensemble(conditional_ensemble(l, a)).entries()) <= 1e-8);
  }
}

TEST_CASE("elementary symmetric polynomials") {
  Vector lambda(3);
  lambda << 1, 2, 3;
  const Vector e = elementary_symmetric(lambda, 3);
  CHECK(e[0] == 1);
  CHECK(e[1] == 6);
  CHECK(e[2] == 11);
  CHECK(e[3] == 6);
  Vector half(1);
  half << 0.5;
  CHECK(elementary_symmetric(half, 1)[1] == 0.5);
  CHECK(kind_of([&] { elementary_symmetric(lambda, 4); }) == ErrorKind::InvalidArgument);

  SUBCASE("recursion equals brute-force subset products") {
    RandomSource rng(77);
    for (int trial = 0; trial < 5; ++trial) {
      Vector values(12);
      for (Eigen::Index i = 0; i < 12; ++i) values[i] = 3.0 * rng.uniform();
      std::vector<double> brute(13, 0.0);
      for (std::uint64_t mask = 0; mask < (1u << 12); ++mask) {
        double prod = 1.0;
        for (std::size_t i : bits(mask, 12)) prod *= values[static_cast<Eigen::Index>(i)];
        brute[static_cast<std::size_t>(std::popcount(mask))] += prod;
      }
      const Vector rec = elementary_symmetric(values, 12);
      for (std::size_t k = 0; k <= 12; ++k)
        CHECK(std::abs(rec[static_cast<Eigen::Index>(k)] - brute[k]) <= 1e-10 * brute[k]);
      CHECK(log_elementary_symmetric(values, 5) == doctest::Approx(std::log(brute[5])).epsilon(1e-12));
    }
  }
  SUBCASE("log form survives spectra that overflow the plain recursion") {
    const Vector huge = Vector::Constant(40, 1e300);
    CHECK(kind_of([&] { elementary_symmetric(huge, 3); }) == ErrorKind::NumericOverflow);
    const double expected = std::log(9880.0) + 3 * std::log(1e300);  // C(40,3)
    CHECK(log_elementary_symmetric(huge, 3) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("pairwise repulsion of marginal kernels") {
  RandomSource rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix k = marginal_from_ensemble(random_ensemble(5, rng)).entries();
    for (Eigen::Index i = 0; i < 5; ++i)
      for (Eigen::Index j = i + 1; j < 5; ++j)
        CHECK(k(i, i) * k(j, j) - k(i, j) * k(i, j) <= k(i, i) * k(j, j));
  }
}

TEST_CASE("superset sums equal det(L + I_{Y\\A})") {
  RandomSource rng(99);
  for (int trial = 0; trial < 3; ++trial) {
    const std::size_t n = 10;
    const Kernel l = random_ensemble(static_cast<Eigen::Index>(n), rng, 0.1, 1.5);
    for (std::uint64_t a : {std::uint64_t{0}, std::uint64_t{0b1}, std::uint64_t{0b1000100101}}) {
      double sum = 0.0;
      for (std::uint64_t b = 0; b < (1u << n); ++b)
        if ((b & a) == a) sum += brute_determinant(l.entries(), bits(b, n));
      Matrix shifted = l.entries();
      for (std::size_t i = 0; i < n; ++i)
        if (!(a & (1u << i))) shifted(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += 1.0;
      CHECK(std::abs(sum - shifted.determinant()) <= 1e-8 * std::abs(sum));
    }
  }
}

TEST_CASE("log_det_psd") {
  CHECK(log_det_psd(Matrix(0, 0)) == 0.0);
  CHECK(log_det_psd(mat({{2, 0}, {0, 3}})) == doctest::Approx(std::log(6.0)));
  CHECK(std::isinf(log_det_psd(mat({{1, 1}, {1, 1}}))));
  CHECK(std::isinf(log_det_psd(mat({{0, 0}, {0, 1}}))));
  // scale-free singularity test: tiny but well-conditioned blocks keep their determinant
  CHECK(log_det_psd(1e-200 * Matrix::Identity(2, 2)) == doctest::Approx(2 * std::log(1e-200)));
}

}  // TEST_SUITE
