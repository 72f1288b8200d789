#include "mdpp/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>
#include <sstream>

#include "mdpp/error.hpp"
#include "mdpp/sampler.hpp"

namespace mdpp {

namespace {

void guard(std::size_t n, std::size_t limit, const char *what) {
  if (n > limit) {
    std::ostringstream msg;
    msg << what << ": N = " << n << " exceeds the enumeration guard of " << limit;
    fail(ErrorKind::GuardExceeded, msg.str());
  }
}

Mask full_mask(std::size_t n) { return n == 64 ? ~Mask{0} : (Mask{1} << n) - 1; }

std::vector<double> determinant_table(const Matrix &a) {
  const auto n = static_cast<std::size_t>(a.rows());
  std::vector<double> dets(std::size_t{1} << n);
  for (Mask mask = 0; mask < dets.size(); ++mask) dets[mask] = std::max(0.0, subset_determinant(a, mask));
  return dets;
}

/// Direct-solve Markov base, independent of the eigenvalue map in the kernel
/// module: M = (I - L)^-1 L.
Matrix markov_base_direct(const Kernel &l) {
  if (l.max_eigenvalue() >= 1.0 - 1e-10) {
    fail(ErrorKind::ChainUndefined, "Markov DPP undefined: largest L eigenvalue is not below 1");
  }
  const Matrix &entries = l.entries();
  const Matrix gap = Matrix::Identity(entries.rows(), entries.cols()) - entries;
  Matrix m = gap.partialPivLu().solve(entries);
  return 0.5 * (m + m.transpose());
}

/// Row-stochastic transition laws, stored sparsely per source mask.
using TransitionTable = std::vector<std::vector<std::pair<Mask, double>>>;

TransitionTable mdpp_transitions(const std::vector<double> &m_dets, std::size_t n) {
  const Mask all = full_mask(n);
  TransitionTable table(m_dets.size());
  for (Mask prev = 0; prev < m_dets.size(); ++prev) {
    const Mask rest = all & ~prev;
    double total = 0.0;
    auto &row = table[prev];
    for (Mask sub = rest;; sub = (sub - 1) & rest) {
      const double w = m_dets[prev | sub];
      if (w > 0.0) row.emplace_back(sub, w);
      total += w;
      if (sub == 0) break;
    }
    if (total > 0.0)
      for (auto &entry : row) entry.second /= total;
  }
  return table;
}

TransitionTable mkdpp_transitions(const std::vector<double> &l_dets, std::size_t n, std::size_t k) {
  const Mask all = full_mask(n);
  TransitionTable table(l_dets.size());
  for (Mask prev = 0; prev < l_dets.size(); ++prev) {
    if (static_cast<std::size_t>(std::popcount(prev)) != k) continue;
    const Mask rest = all & ~prev;
    double total = 0.0;
    auto &row = table[prev];
    for (Mask sub = rest;; sub = (sub - 1) & rest) {
      if (static_cast<std::size_t>(std::popcount(sub)) == k) {
        const double w = l_dets[prev | sub];
        if (w > 0.0) row.emplace_back(sub, w);
        total += w;
      }
      if (sub == 0) break;
    }
    if (total > 0.0)
      for (auto &entry : row) entry.second /= total;
  }
  return table;
}

SetDistribution from_dense(std::size_t n, const std::vector<double> &p, double normalizer = 1.0) {
  SetDistribution d;
  d.n = n;
  d.normalizer = normalizer;
  for (Mask mask = 0; mask < p.size(); ++mask) d.probabilities.emplace(mask, p[mask]);
  return d;
}

std::vector<double> compose(const std::vector<double> &current, const TransitionTable &table) {
  std::vector<double> next(current.size(), 0.0);
  for (Mask prev = 0; prev < current.size(); ++prev) {
    if (current[prev] == 0.0) continue;
    for (const auto &[to, p] : table[prev]) next[to] += current[prev] * p;
  }
  return next;
}

double binomial(std::size_t n, std::size_t k) {
  double out = 1.0;
  for (std::size_t i = 1; i <= k; ++i) out = out * static_cast<double>(n - k + i) / static_cast<double>(i);
  return out;
}

std::vector<double> mkdpp_initial_dense(const std::vector<double> &l_dets, std::size_t n,
                                        std::size_t k) {
  double total = 0.0;
  for (Mask z = 0; z < l_dets.size(); ++z)
    if (static_cast<std::size_t>(std::popcount(z)) == 2 * k) total += l_dets[z];
  if (!(total > 0.0)) {
    fail(ErrorKind::InfeasibleCardinality, "no subset of size 2k has positive determinant");
  }
  const double halves = binomial(2 * k, k);
  std::vector<double> p(std::size_t{1} << n, 0.0);
  for (Mask z = 0; z < l_dets.size(); ++z) {
    if (static_cast<std::size_t>(std::popcount(z)) != 2 * k || l_dets[z] == 0.0) continue;
    const double share = l_dets[z] / total / halves;
    for (Mask y = z;; y = (y - 1) & z) {
      if (static_cast<std::size_t>(std::popcount(y)) == k) p[y] += share;
      if (y == 0) break;
    }
  }
  return p;
}

std::vector<double> dpp_dense(const std::vector<double> &dets) {
  double total = 0.0;
  for (double w : dets) total += w;
  std::vector<double> p(dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) p[i] = dets[i] / total;
  return p;
}

double relative_error(double value, double reference) {
  const double scale = std::max(std::abs(reference), 1e-300);
  return std::abs(value - reference) / scale;
}

}  // namespace

double SetDistribution::probability(Mask mask) const {
  const auto it = probabilities.find(mask);
  return it == probabilities.end() ? 0.0 : it->second;
}

double SetDistribution::total() const {
  double sum = 0.0;
  for (const auto &entry : probabilities) sum += entry.second;
  return sum;
}

double subset_determinant(const Matrix &a, Mask mask) {
  std::vector<std::size_t> items;
  for (std::size_t i = 0; i < static_cast<std::size_t>(a.rows()); ++i)
    if (mask & (Mask{1} << i)) items.push_back(i);
  if (items.empty()) return 1.0;
  return principal_submatrix(a, items).partialPivLu().determinant();
}

SetDistribution enumerate_dpp(const Kernel &l) {
  const std::size_t n = l.size();
  guard(n, kEnumerationLimit, "enumerate_dpp");
  const auto dets = determinant_table(l.entries());
  double total = 0.0;
  for (double w : dets) total += w;
  return from_dense(n, dpp_dense(dets), total);
}

SetDistribution enumerate_kdpp(const Kernel &l, std::size_t k) {
  const std::size_t n = l.size();
  guard(n, kEnumerationLimit, "enumerate_kdpp");
  if (k > n) fail(ErrorKind::InvalidArgument, "enumerate_kdpp: k exceeds N");
  SetDistribution d;
  d.n = n;
  double total = 0.0;
  for (Mask mask = 0; mask < (Mask{1} << n); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) != k) continue;
    const double w = std::max(0.0, subset_determinant(l.entries(), mask));
    d.probabilities.emplace(mask, w);
    total += w;
  }
  if (!(total > 0.0)) fail(ErrorKind::InfeasibleCardinality, "every size-k subset has determinant 0");
  for (auto &entry : d.probabilities) entry.second /= total;
  d.normalizer = total;
  return d;
}

SetDistribution enumerate_mkdpp_initial(const Kernel &l, std::size_t k) {
  const std::size_t n = l.size();
  guard(n, kEnumerationLimit, "enumerate_mkdpp_initial");
  if (k == 0 || 2 * k > n) fail(ErrorKind::InfeasibleCardinality, "Markov k-DPP needs 1 <= 2k <= N");
  const auto dets = determinant_table(l.entries());
  return from_dense(n, mkdpp_initial_dense(dets, n, k));
}

SetDistribution mkdpp_margin_closed_form(const Kernel &l, std::size_t k) {
  const std::size_t n = l.size();
  guard(n, kEnumerationLimit, "mkdpp_margin_closed_form");
  if (k == 0 || 2 * k > n) fail(ErrorKind::InfeasibleCardinality, "Markov k-DPP needs 1 <= 2k <= N");
  const auto dets = determinant_table(l.entries());
  const Mask all = full_mask(n);
  double pair_total = 0.0;
  for (Mask b = 0; b < dets.size(); ++b)
    if (static_cast<std::size_t>(std::popcount(b)) == 2 * k) pair_total += dets[b];
  const double denom = binomial(2 * k, k) * pair_total;
  std::vector<double> p(dets.size(), 0.0);
  for (Mask y = 0; y < dets.size(); ++y) {
    if (static_cast<std::size_t>(std::popcount(y)) != k) continue;
    const Mask rest = all & ~y;
    double numer = 0.0;
    for (Mask a = rest;; a = (a - 1) & rest) {
      if (static_cast<std::size_t>(std::popcount(a)) == k) numer += dets[y | a];
      if (a == 0) break;
    }
    p[y] = numer / denom;
  }
  return from_dense(n, p);
}

SetDistribution enumerate_chain_marginal(const Kernel &l, ChainVariant variant, std::size_t k,
                                         std::size_t t) {
  const std::size_t n = l.size();
  guard(n, kChainEnumerationLimit, "enumerate_chain_marginal");
  if (t == 0) fail(ErrorKind::InvalidArgument, "time index starts at 1");
  const auto l_dets = determinant_table(l.entries());
  std::vector<double> current;
  TransitionTable table;
  if (variant == ChainVariant::MDPP) {
    current = dpp_dense(l_dets);
    table = mdpp_transitions(determinant_table(markov_base_direct(l)), n);
  } else {
    if (k == 0 || 2 * k > n) fail(ErrorKind::InfeasibleCardinality, "Markov k-DPP needs 1 <= 2k <= N");
    current = mkdpp_initial_dense(l_dets, n, k);
    table = mkdpp_transitions(l_dets, n, k);
  }
  for (std::size_t step = 1; step < t; ++step) current = compose(current, table);
  return from_dense(n, current);
}

SetDistribution enumerate_union(const Kernel &l, ChainVariant variant, std::size_t k) {
  const std::size_t n = l.size();
  guard(n, kChainEnumerationLimit, "enumerate_union");
  const auto l_dets = determinant_table(l.entries());
  std::vector<double> initial;
  TransitionTable table;
  if (variant == ChainVariant::MDPP) {
    initial = dpp_dense(l_dets);
    table = mdpp_transitions(determinant_table(markov_base_direct(l)), n);
  } else {
    if (k == 0 || 2 * k > n) fail(ErrorKind::InfeasibleCardinality, "Markov k-DPP needs 1 <= 2k <= N");
    initial = mkdpp_initial_dense(l_dets, n, k);
    table = mkdpp_transitions(l_dets, n, k);
  }
  std::vector<double> joint(initial.size(), 0.0);
  for (Mask y1 = 0; y1 < initial.size(); ++y1) {
    if (initial[y1] == 0.0) continue;
    for (const auto &[y2, p] : table[y1]) joint[y1 | y2] += initial[y1] * p;
  }
  return from_dense(n, joint);
}

SetDistribution empirical_distribution(const std::function<Subset(RandomSource &)> &sample,
                                       std::size_t n_samples, RandomSource &rng) {
  if (n_samples == 0) fail(ErrorKind::InvalidArgument, "empirical_distribution needs n_samples >= 1");
  SetDistribution d;
  std::map<Mask, std::size_t> counts;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const Subset s = sample(rng);
    d.n = s.ground_size();
    ++counts[s.mask()];
  }
  for (const auto &[mask, count] : counts)
    d.probabilities.emplace(mask, static_cast<double>(count) / static_cast<double>(n_samples));
  return d;
}

double tv_distance(const SetDistribution &p, const SetDistribution &q) {
  if (p.n != q.n) fail(ErrorKind::InvalidArgument, "tv_distance over different ground sets");
  double sum = 0.0;
  for (const auto &[mask, value] : p.probabilities) sum += std::abs(value - q.probability(mask));
  for (const auto &[mask, value] : q.probabilities)
    if (!p.probabilities.contains(mask)) sum += std::abs(value);
  return 0.5 * sum;
}

double max_abs_deviation(const SetDistribution &p, const SetDistribution &q) {
  if (p.n != q.n) fail(ErrorKind::InvalidArgument, "max_abs_deviation over different ground sets");
  double worst = 0.0;
  for (const auto &[mask, value] : p.probabilities)
    worst = std::max(worst, std::abs(value - q.probability(mask)));
  for (const auto &[mask, value] : q.probabilities)
    if (!p.probabilities.contains(mask)) worst = std::max(worst, std::abs(value));
  return worst;
}

// ---------------------------------------------------------------- battery

namespace {

class Battery {
public:
  explicit Battery(double tolerance) : tolerance_(tolerance) {}

  template <typename Fn>
  void run(const std::string &name, Fn &&fn, double tolerance = -1.0) {
    CheckResult r;
    r.name = name;
    r.tolerance = tolerance > 0.0 ? tolerance : tolerance_;
    try {
      r.deviation = fn();
      r.passed = std::isfinite(r.deviation) && r.deviation <= r.tolerance;
    } catch (const Error &e) {
      r.deviation = std::numeric_limits<double>::infinity();
      r.passed = false;
      r.note = std::string(to_string(e.kind())) + ": " + e.what();
    }
    results_.push_back(std::move(r));
  }

  void skip(const std::string &name, const std::string &why) {
    CheckResult r;
    r.name = name;
    r.tolerance = tolerance_;
    r.passed = true;
    r.note = "skipped: " + why;
    results_.push_back(std::move(r));
  }

  std::vector<CheckResult> take() { return std::move(results_); }

private:
  double tolerance_;
  std::vector<CheckResult> results_;
};

/// Deterministic sample of conditioning sets: the empty set, singletons and
/// adjacent pairs, capped at `limit`.
std::vector<Mask> probe_sets(std::size_t n, std::size_t limit, std::size_t size = 0) {
  std::vector<Mask> out;
  auto push = [&](Mask m) {
    if (out.size() < limit && (size == 0 || static_cast<std::size_t>(std::popcount(m)) == size))
      out.push_back(m);
  };
  if (size == 0) push(0);
  for (std::size_t i = 0; i < n; ++i) push(Mask{1} << i);
  for (std::size_t i = 0; i + 1 < n; ++i) push((Mask{1} << i) | (Mask{1} << (i + 1)));
  for (std::size_t i = 0; i + 2 < n; ++i)
    push((Mask{1} << i) | (Mask{1} << (i + 1)) | (Mask{1} << (i + 2)));
  return out;
}

}  // namespace

std::vector<CheckResult> oracle_battery(const Kernel &l, const BatteryOptions &options) {
  const std::size_t n = l.size();
  guard(n, kEnumerationLimit, "oracle_battery");
  if (n == 0) fail(ErrorKind::InvalidArgument, "oracle_battery needs at least one item");
  Battery battery(options.tolerance);
  const Vector &lambda = l.eigen().eigenvalues;
  const auto l_dets = determinant_table(l.entries());
  const SetDistribution dpp = from_dense(n, dpp_dense(l_dets));

  battery.run("dpp_normalizer", [&] {
    double total = 0.0;
    for (double w : l_dets) total += w;
    return relative_error(total, (1.0 + lambda.array()).prod());
  });

  battery.run("dpp_log_prob_matches_enumeration", [&] {
    double worst = 0.0;
    double mass = 0.0;
    for (Mask mask = 0; mask < l_dets.size(); ++mask) {
      const double p = std::exp(log_prob_dpp(l, Subset::from_mask(n, mask)));
      mass += p;
      worst = std::max(worst, std::abs(p - dpp.probability(mask)));
    }
    return std::max(worst, std::abs(mass - 1.0));
  });

  battery.run("elementary_symmetric_bruteforce", [&] {
    const Vector e = elementary_symmetric(lambda, n);
    std::vector<double> brute(n + 1, 0.0);
    for (Mask mask = 0; mask < (Mask{1} << n); ++mask) {
      double prod = 1.0;
      for (std::size_t i = 0; i < n; ++i)
        if (mask & (Mask{1} << i)) prod *= lambda[static_cast<Eigen::Index>(i)];
      brute[static_cast<std::size_t>(std::popcount(mask))] += prod;
    }
    double worst = 0.0;
    for (std::size_t k = 0; k <= n; ++k)
      if (brute[k] > 1e-250) worst = std::max(worst, relative_error(e[static_cast<Eigen::Index>(k)], brute[k]));
    return worst;
  }, 1e-10);

  battery.run("kdpp_normalizer", [&] {
    const Vector e = elementary_symmetric(lambda, n);
    std::vector<double> sums(n + 1, 0.0);
    for (Mask mask = 0; mask < l_dets.size(); ++mask) sums[static_cast<std::size_t>(std::popcount(mask))] += l_dets[mask];
    // relative to the largest term so rank-deficient orders compare sensibly
    double worst = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
      const double scale = std::max(std::abs(e[static_cast<Eigen::Index>(k)]), 1e-300);
      if (e[static_cast<Eigen::Index>(k)] > 1e-12 * std::pow(std::max(1.0, lambda.maxCoeff()), static_cast<double>(k)))
        worst = std::max(worst, std::abs(sums[k] - e[static_cast<Eigen::Index>(k)]) / scale);
    }
    return worst;
  });

  if (options.k >= 1 && options.k <= l.rank()) {
    battery.run("kdpp_log_prob_matches_enumeration", [&] {
      const SetDistribution kdpp = enumerate_kdpp(l, options.k);
      double worst = 0.0;
      for (const auto &[mask, p] : kdpp.probabilities) {
        const double q = std::exp(log_prob_kdpp(l, Subset::from_mask(n, mask), options.k));
        worst = std::max(worst, std::abs(p - q));
      }
      return worst;
    });
  }

  battery.run("superset_sum_identity", [&] {
    // sum_{B ⊇ A} det(L_B) via a superset-sum transform, against det(L + I_{Y\A})
    std::vector<double> sums = l_dets;
    for (std::size_t bit = 0; bit < n; ++bit)
      for (Mask m = 0; m < sums.size(); ++m)
        if (!(m & (Mask{1} << bit))) sums[m] += sums[m | (Mask{1} << bit)];
    double worst = 0.0;
    for (Mask a : probe_sets(n, 64)) {
      Matrix shifted = l.entries();
      for (std::size_t i = 0; i < n; ++i)
        if (!(a & (Mask{1} << i))) shifted(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += 1.0;
      const double det = shifted.partialPivLu().determinant();
      const double scale = std::max(std::abs(det), 1e-300);
      if (sums[a] > 1e-14 * sums[0]) worst = std::max(worst, std::abs(sums[a] - det) / scale);
    }
    return worst;
  });

  battery.run("marginal_kernel_inclusion", [&] {
    const Matrix k = marginal_from_ensemble(l).entries();
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        const Mask pair = (Mask{1} << i) | (Mask{1} << j);
        double inclusion = 0.0;
        for (const auto &[mask, p] : dpp.probabilities)
          if ((mask & pair) == pair) inclusion += p;
        const auto a = static_cast<Eigen::Index>(i);
        const auto b = static_cast<Eigen::Index>(j);
        const double expected = i == j ? k(a, a) : k(a, a) * k(b, b) - k(a, b) * k(a, b);
        worst = std::max(worst, std::abs(inclusion - expected));
      }
    }
    return worst;
  });

  battery.run("marginal_ensemble_round_trip", [&] {
    const Kernel k = marginal_from_ensemble(l);
    if (k.max_eigenvalue() >= 1.0 - 1e-10) return 0.0;
    return (ensemble_from_marginal(k).entries() - l.entries()).cwiseAbs().maxCoeff() /
           std::max(1.0, l.entries().cwiseAbs().maxCoeff());
  });

  battery.run("conditional_kernels_match_enumeration", [&] {
    double worst = 0.0;
    std::vector<double> superset = l_dets;
    for (std::size_t bit = 0; bit < n; ++bit)
      for (Mask m = 0; m < superset.size(); ++m)
        if (!(m & (Mask{1} << bit))) superset[m] += superset[m | (Mask{1} << bit)];
    for (Mask a : probe_sets(n, 8)) {
      if (a == 0 || superset[a] <= 1e-10 * superset[0]) continue;
      const Subset given = Subset::from_mask(n, a);
      const Subset rest = given.complement();
      const Kernel la = conditional_ensemble(l, given);
      const Kernel ka = conditional_marginal(l, given);
      if (!rest.empty())
        worst = std::max(worst, (marginal_from_ensemble(la).entries() - ka.entries()).cwiseAbs().maxCoeff());
      const double norm = (1.0 + la.eigen().eigenvalues.array()).prod();
      const std::size_t r = rest.size();
      for (Mask local = 0; local < (Mask{1} << r); ++local) {
        Mask parent = a;
        for (std::size_t i = 0; i < r; ++i)
          if (local & (Mask{1} << i)) parent |= Mask{1} << rest[i];
        const double expected = l_dets[parent] / superset[a];
        const double got = std::max(0.0, subset_determinant(la.entries(), local)) / norm;
        worst = std::max(worst, std::abs(expected - got));
      }
    }
    return worst;
  });

  if (options.markov_dpp) {
    if (l.max_eigenvalue() >= 1.0 - 1e-10) {
      battery.run("mdpp_chain_defined", [&]() -> double {
        markov_base(l);
        return 0.0;
      });
    } else {
      const Kernel m = markov_base(l);
      const Vector &mu = m.eigen().eigenvalues;

      battery.run("mdpp_normalizer_identity", [&] {
        const Matrix id = Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        const double lhs = (m.entries() + id).partialPivLu().determinant() *
                           (l.entries() + id).partialPivLu().determinant();
        const double rhs = (2.0 * m.entries() + id).partialPivLu().determinant();
        return relative_error(lhs, rhs);
      });

      battery.run("mdpp_union_marginal_kernel", [&] {
        const Matrix id = Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        const Matrix two_m = 2.0 * m.entries();
        const Matrix lhs = (two_m + id).partialPivLu().solve(two_m).transpose();
        const Matrix rhs = 2.0 * marginal_from_ensemble(l).entries();
        return (lhs - rhs).cwiseAbs().maxCoeff();
      });

      battery.run("mdpp_transition_normalization", [&] {
        const std::size_t limit = n <= kChainEnumerationLimit ? 16 : 4;
        double worst = 0.0;
        for (Mask prev : probe_sets(n, limit)) {
          const Subset previous = Subset::from_mask(n, prev);
          const Mask rest = full_mask(n) & ~prev;
          double mass = 0.0;
          for (Mask sub = rest;; sub = (sub - 1) & rest) {
            mass += std::exp(mdpp_transition_logprob(l, previous, Subset::from_mask(n, sub)));
            if (sub == 0) break;
          }
          worst = std::max(worst, std::abs(mass - 1.0));
        }
        return worst;
      });

      if (n <= kChainEnumerationLimit) {
        battery.run("mdpp_stationarity", [&] {
          return max_abs_deviation(enumerate_chain_marginal(l, ChainVariant::MDPP, 0, 2), dpp);
        });
        battery.run("mdpp_union_law", [&] {
          const SetDistribution uni = enumerate_union(l, ChainVariant::MDPP, 0);
          const Matrix two_m = 2.0 * m.entries();
          const double norm = (1.0 + 2.0 * mu.array()).prod();
          double worst = 0.0;
          for (const auto &[mask, p] : uni.probabilities)
            worst = std::max(worst, std::abs(p - std::max(0.0, subset_determinant(two_m, mask)) / norm));
          return worst;
        });
        battery.run("mdpp_union_inclusion_2k", [&] {
          const SetDistribution uni = enumerate_union(l, ChainVariant::MDPP, 0);
          const Matrix two_k = 2.0 * marginal_from_ensemble(l).entries();
          double worst = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i; j < n; ++j) {
              const Mask pair = (Mask{1} << i) | (Mask{1} << j);
              double inclusion = 0.0;
              for (const auto &[mask, p] : uni.probabilities)
                if ((mask & pair) == pair) inclusion += p;
              worst = std::max(worst, std::abs(inclusion - subset_determinant(two_k, pair)));
            }
          }
          return worst;
        });
      } else {
        battery.skip("mdpp_stationarity", "N exceeds the chain enumeration guard");
        battery.skip("mdpp_union_law", "N exceeds the chain enumeration guard");
      }
    }
  }

  if (options.markov_kdpp) {
    const std::size_t k = options.k;
    if (k == 0 || 2 * k > l.rank()) {
      battery.skip("mkdpp_checks", "2k exceeds the kernel rank");
    } else if (n > kChainEnumerationLimit) {
      battery.skip("mkdpp_checks", "N exceeds the chain enumeration guard");
    } else {
      const SetDistribution closed = mkdpp_margin_closed_form(l, k);
      battery.run("mkdpp_initial_margin", [&] {
        return max_abs_deviation(enumerate_mkdpp_initial(l, k), closed);
      });
      battery.run("mkdpp_stationary_margin", [&] {
        return max_abs_deviation(enumerate_chain_marginal(l, ChainVariant::MkDPP, k, 2), closed);
      });
      battery.run("mkdpp_union_law", [&] {
        const SetDistribution uni = enumerate_union(l, ChainVariant::MkDPP, k);
        const double e2k = elementary_symmetric(lambda, 2 * k)[static_cast<Eigen::Index>(2 * k)];
        double worst = 0.0;
        for (Mask c = 0; c < l_dets.size(); ++c) {
          const double expected =
              static_cast<std::size_t>(std::popcount(c)) == 2 * k ? l_dets[c] / e2k : 0.0;
          worst = std::max(worst, std::abs(uni.probability(c) - expected));
        }
        return worst;
      });
      battery.run("mkdpp_transition_normalization", [&] {
        double worst = 0.0;
        for (Mask prev : probe_sets(n, 8, k)) {
          if (l_dets[prev] <= 0.0) continue;
          const Subset previous = Subset::from_mask(n, prev);
          const Mask rest = full_mask(n) & ~prev;
          double mass = 0.0;
          for (Mask sub = rest;; sub = (sub - 1) & rest) {
            if (static_cast<std::size_t>(std::popcount(sub)) == k)
              mass += std::exp(mkdpp_transition_logprob(l, previous, Subset::from_mask(n, sub), k));
            if (sub == 0) break;
          }
          worst = std::max(worst, std::abs(mass - 1.0));
        }
        return worst;
      });
    }
  }

  return battery.take();
}

}  // namespace mdpp
