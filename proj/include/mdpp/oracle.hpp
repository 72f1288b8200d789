#ifndef MDPP_ORACLE_HPP
#define MDPP_ORACLE_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mdpp/kernel.hpp"
#include "mdpp/markov.hpp"
#include "mdpp/random.hpp"

namespace mdpp {

using Mask = std::uint64_t;

/// Distribution over subsets of a ground set of size N <= 64, keyed by
/// bitmask (bit i set iff item i is in the set).
struct SetDistribution {
  std::size_t n = 0;
  std::map<Mask, double> probabilities;
  /// Total unnormalized mass for enumerated distributions, 1 otherwise.
  double normalizer = 1.0;

  double probability(Mask mask) const;
  double total() const;
};

inline constexpr std::size_t kEnumerationLimit = 16;
inline constexpr std::size_t kChainEnumerationLimit = 10;

/// det of the principal submatrix selected by `mask`, by partial-pivot LU.
/// Deliberately independent of the Cholesky route used by the samplers.
double subset_determinant(const Matrix &a, Mask mask);

/// P(Y = A) proportional to det(L_A) over all 2^N subsets.
SetDistribution enumerate_dpp(const Kernel &l);

/// P(Y = A) proportional to det(L_A) over subsets of size k.
SetDistribution enumerate_kdpp(const Kernel &l, std::size_t k);

/// Law of Y_t obtained by composing the initial law with t - 1 exhaustive
/// transitions. All normalizers are brute-force sums; M is formed by a
/// direct solve, not through markov_base.
SetDistribution enumerate_chain_marginal(const Kernel &l, ChainVariant variant, std::size_t k,
                                         std::size_t t = 2);

/// Law of Z_2 = Y_1 ∪ Y_2 by enumeration of the joint law of (Y_1, Y_2).
SetDistribution enumerate_union(const Kernel &l, ChainVariant variant, std::size_t k);

/// Law of Y_1 under the Markov k-DPP initializer (2k-DPP then a uniform half).
SetDistribution enumerate_mkdpp_initial(const Kernel &l, std::size_t k);

/// Closed-form Markov k-DPP margin:
///   sum_{|A|=k} det(L_{Y ∪ A}) / (C(2k,k) sum_{|B|=2k} det(L_B)).
SetDistribution mkdpp_margin_closed_form(const Kernel &l, std::size_t k);

SetDistribution empirical_distribution(const std::function<Subset(RandomSource &)> &sample,
                                       std::size_t n_samples, RandomSource &rng);

/// Half the l1 distance over the union of supports.
double tv_distance(const SetDistribution &p, const SetDistribution &q);

/// Largest |p(A) - q(A)| over the union of supports.
double max_abs_deviation(const SetDistribution &p, const SetDistribution &q);

struct CheckResult {
  std::string name;
  double deviation = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string note;  // set when a check could not run, e.g. chain undefined
};

struct BatteryOptions {
  std::size_t k = 2;          // Markov k-DPP size; skipped when 2k exceeds rank
  bool markov_dpp = true;     // run the Markov DPP checks
  bool markov_kdpp = true;    // run the Markov k-DPP checks
  double tolerance = 1e-8;
};

/// Exact invariant checks for one kernel: normalizations, elementary
/// symmetric polynomials, conditional kernels, stationarity, union laws and
/// the determinant/kernel identities behind them.
std::vector<CheckResult> oracle_battery(const Kernel &l, const BatteryOptions &options);

}  // namespace mdpp

#endif  // MDPP_ORACLE_HPP
