// Acceptance report. Prints one PASS/FAIL line per criterion; exact laws are
// recomputed here by brute-force enumeration and compared with the library.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "mdpp/experiment.hpp"
#include "mdpp/io.hpp"
#include "mdpp/kernel.hpp"
#include "mdpp/markov.hpp"
#include "mdpp/oracle.hpp"
#include "mdpp/sampler.hpp"
#include "support.hpp"

#ifndef MDPP_CONFIG_DIR
#error "MDPP_CONFIG_DIR must name the directory holding the experiment configs"
#endif

using namespace mdpp;
using namespace mdpp::testing;

namespace {

using Law = std::vector<double>;  // indexed by subset mask

int failures = 0;
std::string report_text;

void report(int id, bool pass, const std::string &detail) {
  if (!pass) ++failures;
  const std::string line = std::string(pass ? "PASS" : "FAIL") + " criterion " + std::to_string(id) + ": " + detail;
  std::printf("%s\n", line.c_str());
  std::fflush(stdout);
  report_text += line + "\n";
}

std::string fmt(const char *format, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

double det_of(const Matrix &a, std::uint64_t mask) {
  const auto items = bits(mask, static_cast<std::size_t>(a.rows()));
  return items.empty() ? 1.0 : brute_determinant(a, items);
}

// P(Y) proportional to det(A_Y), optionally restricted to |Y| = k.
Law subset_law(const Matrix &a, int k = -1) {
  const std::size_t n = static_cast<std::size_t>(a.rows());
  Law law(std::size_t{1} << n, 0.0);
  double total = 0.0;
  for (std::uint64_t m = 0; m < law.size(); ++m) {
    if (k >= 0 && std::popcount(m) != k) continue;
    law[m] = std::max(det_of(a, m), 0.0);
    total += law[m];
  }
  for (double &p : law) p /= total;
  return law;
}

double tv(const Law &exact, const std::vector<long> &counts, long draws) {
  double sum = 0.0;
  for (std::size_t m = 0; m < exact.size(); ++m) sum += std::abs(exact[m] - double(counts[m]) / double(draws));
  return 0.5 * sum;
}

double max_dev(const Law &a, const Law &b) {
  double worst = 0.0;
  for (std::size_t m = 0; m < a.size(); ++m) worst = std::max(worst, std::abs(a[m] - b[m]));
  return worst;
}

double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

// Valid chain kernel: spectrum uniform in [0.05, 0.95].
Kernel chain_kernel(Eigen::Index n, RandomSource &rng) { return random_ensemble(n, rng, 0.05, 0.95); }

void dpp_sampling() {
  // rank-3 Wishart kernels keep the sampling noise of TV near 0.007
  RandomSource rng(101);
  const long draws = 200000;
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix g = gaussian(8, 3, rng);
    const Matrix a = g * g.transpose();
    const Kernel l(0.5 * (a + a.transpose()), KernelForm::Ensemble);
    const Law exact = subset_law(l.entries());
    std::vector<long> counts(exact.size(), 0);
    for (long i = 0; i < draws; ++i) ++counts[sample_dpp(l, rng).mask()];
    worst = std::max(worst, tv(exact, counts, draws));
  }
  report(1, worst <= 0.01, fmt("DPP sampler, 5 kernels N=8, 2e5 draws: max TV %.5f (<= 0.01)", worst));
}

void kdpp_sampling() {
  RandomSource rng(202);
  const long draws = 200000;
  double worst = 0.0;
  bool sizes = true;
  for (int trial = 0; trial < 5; ++trial) {
    const Kernel l = random_ensemble(8, rng);
    const Law exact = subset_law(l.entries(), 3);
    std::vector<long> counts(exact.size(), 0);
    for (long i = 0; i < draws; ++i) {
      const Subset y = sample_kdpp(l, 3, rng);
      sizes = sizes && y.size() == 3;
      ++counts[y.mask()];
    }
    worst = std::max(worst, tv(exact, counts, draws));
  }
  report(2, worst <= 0.01 && sizes,
         fmt("k-DPP sampler, 5 kernels N=8 k=3, 2e5 draws: max TV %.5f (<= 0.01)", worst) +
             (sizes ? ", every sample has size 3" : ", WRONG SAMPLE SIZE"));
}

void mdpp_stationarity() {
  RandomSource rng(303);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const Kernel l = chain_kernel(6, rng);
    const Law p = subset_law(l.entries());
    Law next(p.size(), 0.0);
    for (std::uint64_t a = 0; a < p.size(); ++a)
      for (std::uint64_t b = 0; b < p.size(); ++b) {
        if (a & b) continue;
        next[b] += p[a] * std::exp(mdpp_transition_logprob(l, Subset::from_mask(6, a), Subset::from_mask(6, b)));
      }
    worst = std::max(worst, max_dev(next, p));
  }
  report(3, worst <= 1e-8, fmt("M-DPP one-step composition vs DPP(L), N=6: max deviation %.3g (<= 1e-8)", worst));
}

void mdpp_union() {
  RandomSource rng(404);
  double law_dev = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const Kernel l = chain_kernel(6, rng);
    const Matrix &lm = l.entries();
    const Matrix id = Matrix::Identity(6, 6);
    const Matrix m = lm * (id - lm).inverse();
    const Law p = subset_law(lm);
    Law joined(p.size(), 0.0);
    for (std::uint64_t a = 0; a < p.size(); ++a)
      for (std::uint64_t b = 0; b < p.size(); ++b) {
        if (a & b) continue;
        joined[a | b] += p[a] * std::exp(mdpp_transition_logprob(l, Subset::from_mask(6, a), Subset::from_mask(6, b)));
      }
    law_dev = std::max(law_dev, max_dev(joined, subset_law(0.5 * ((2.0 * m) + (2.0 * m).transpose()))));
  }

  double kernel_dev = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Kernel l = chain_kernel(8, rng);
    const Matrix m2 = 2.0 * markov_base(l).entries();
    const Matrix id = Matrix::Identity(8, 8);
    const Matrix union_k = m2 * (m2 + id).inverse();
    kernel_dev = std::max(kernel_dev, max_abs(union_k - 2.0 * marginal_from_ensemble(l).entries()));
  }
  report(4, law_dev <= 1e-8 && kernel_dev <= 1e-8,
         fmt("M-DPP union law vs DPP(2M), N=6: %.3g; 2M(2M+I)^-1 vs 2K over 20 kernels: %.3g (both <= 1e-8)",
             law_dev, kernel_dev));
}

void mkdpp_union() {
  RandomSource rng(505);
  const int n = 6, k = 2;
  double margin_dev = 0.0, law_dev = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const Kernel l = random_ensemble(n, rng);
    const Law z = subset_law(l.entries(), 2 * k);
    // margin of Y_1: each 2k-set splits into C(2k, k) equally likely halves
    Law y(z.size(), 0.0);
    for (std::uint64_t c = 0; c < z.size(); ++c) {
      if (std::popcount(c) != 2 * k) continue;
      for (std::uint64_t a = c;; a = (a - 1) & c) {
        if (std::popcount(a) == k) y[a] += z[c] / binomial(2 * k, k);
        if (a == 0) break;
      }
    }
    const SetDistribution init = enumerate_mkdpp_initial(l, k);
    for (std::uint64_t a = 0; a < y.size(); ++a) margin_dev = std::max(margin_dev, std::abs(init.probability(a) - y[a]));

    // Y_2 keeps the same margin
    Law joined(z.size(), 0.0), second(z.size(), 0.0);
    for (std::uint64_t a = 0; a < z.size(); ++a) {
      if (std::popcount(a) != k) continue;
      for (std::uint64_t b = 0; b < z.size(); ++b) {
        if ((a & b) || std::popcount(b) != k) continue;
        const double p =
            y[a] * std::exp(mkdpp_transition_logprob(l, Subset::from_mask(n, a), Subset::from_mask(n, b), k));
        joined[a | b] += p;
        second[b] += p;
      }
    }
    law_dev = std::max(law_dev, max_dev(joined, z));
    margin_dev = std::max(margin_dev, max_dev(second, y));
  }
  report(5, law_dev <= 1e-8 && margin_dev <= 1e-8,
         fmt("M-kDPP union law vs 2k-DPP(L), N=6 k=2: %.3g; Y_1 and Y_2 margins vs closed form: %.3g (both <= 1e-8)", law_dev,
             margin_dev));
}

void esp() {
  RandomSource rng(606);
  double esp_err = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Vector v(12);
    for (Eigen::Index i = 0; i < 12; ++i) v[i] = 0.05 + 3.0 * rng.uniform();
    std::vector<double> brute(13, 0.0);
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << 12); ++m) {
      double prod = 1.0;
      for (std::size_t i : bits(m, 12)) prod *= v[static_cast<Eigen::Index>(i)];
      brute[static_cast<std::size_t>(std::popcount(m))] += prod;
    }
    const Vector e = elementary_symmetric(v, 12);
    for (std::size_t k = 0; k <= 12; ++k)
      esp_err = std::max(esp_err, std::abs(e[static_cast<Eigen::Index>(k)] - brute[k]) / brute[k]);
  }

  double norm_err = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const Kernel l = random_ensemble(10, rng);
    std::vector<double> brute(11, 0.0);
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << 10); ++m)
      brute[static_cast<std::size_t>(std::popcount(m))] += det_of(l.entries(), m);
    const Vector e = elementary_symmetric(l.eigen().eigenvalues, 10);
    for (std::size_t k = 0; k <= 10; ++k)
      norm_err = std::max(norm_err, std::abs(e[static_cast<Eigen::Index>(k)] - brute[k]) / brute[k]);
  }
  report(6, esp_err <= 1e-10 && norm_err <= 1e-8,
         fmt("ESP vs subset sums, N=12 all k: rel %.3g (<= 1e-10); k-DPP normalizer, N=10 all k: rel %.3g (<= 1e-8)",
             esp_err, norm_err));
}

void determinant_identity() {
  RandomSource rng(707);
  double worst = 0.0;
  const Matrix id = Matrix::Identity(8, 8);
  for (int trial = 0; trial < 20; ++trial) {
    const Kernel l = chain_kernel(8, rng);
    const Matrix m = markov_base(l).entries();
    const double lhs = (m + id).determinant() * (l.entries() + id).determinant();
    const double rhs = (2.0 * m + id).determinant();
    worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
  }
  report(7, worst <= 1e-8, fmt("det(M+I)det(L+I) vs det(2M+I), 20 kernels N=8: rel %.3g (<= 1e-8)", worst));
}

ExperimentConfig load(const std::string &name) {
  return config_from_json(read_file(std::string(MDPP_CONFIG_DIR) + "/" + name));
}

// at least two workers, so the determinism rerun on one worker differs in thread count
std::size_t threads() { return std::max(2u, std::thread::hardware_concurrency()); }

bool disjoint_above(const Summary &hi, const Summary &lo) { return hi.ci95.low > lo.ci95.high; }
bool overlap(const Summary &a, const Summary &b) { return a.ci95.low <= b.ci95.high && b.ci95.low <= a.ci95.high; }

std::string ci(const Summary &s) { return fmt("%.4f [%.4f, %.4f]", s.mean, s.ci95.low, s.ci95.high); }

std::string fixed_csv;

void fixed_quality() {
  const ExperimentResult r = run_experiment(load("fixed_quality.json"), threads());
  fixed_csv = to_csv(r);
  const auto s = [&](const char *strategy, const char *metric) -> const Summary & {
    return r.summary(strategy, metric);
  };

  const bool step = disjoint_above(s("mkdpp", "step_diversity_1"), s("kdpp", "step_diversity_1"));
  const bool marginal = overlap(s("mkdpp", "marginal_diversity"), s("kdpp", "marginal_diversity")) &&
                        s("mkdpp", "marginal_diversity").mean > s("weighted", "marginal_diversity").mean &&
                        s("kdpp", "marginal_diversity").mean > s("weighted", "marginal_diversity").mean;
  const bool quality = disjoint_above(s("weighted", "avg_quality"), s("mkdpp", "avg_quality")) &&
                       disjoint_above(s("weighted", "avg_quality"), s("kdpp", "avg_quality"));
  bool uniform = true;
  for (const auto &strategy : r.config.strategies) {
    const std::string name = strategy.name();
    if (name == "uniform") continue;
    for (const char *metric : {"marginal_diversity", "step_diversity_1", "step_diversity_2"})
      uniform = uniform && s("uniform", metric).mean > s(name.c_str(), metric).mean;
    uniform = uniform && s("uniform", "avg_quality").mean < s(name.c_str(), "avg_quality").mean;
  }
  std::string detail = "fixed quality, 20 runs:";
  detail += std::string(" (i) 1-step diversity M-kDPP ") + ci(s("mkdpp", "step_diversity_1")) + " vs k-DPP " +
            ci(s("kdpp", "step_diversity_1")) + (step ? " ok;" : " NOT DISJOINT;");
  detail += std::string(" (ii) marginal diversity M-kDPP ") + ci(s("mkdpp", "marginal_diversity")) + " k-DPP " +
            ci(s("kdpp", "marginal_diversity")) + " weighted " + ci(s("weighted", "marginal_diversity")) +
            (marginal ? " ok;" : " FAILED;");
  detail += std::string(" (iii) quality weighted ") + ci(s("weighted", "avg_quality")) + " M-kDPP " +
            ci(s("mkdpp", "avg_quality")) + " k-DPP " + ci(s("kdpp", "avg_quality")) +
            (quality ? " ok;" : " FAILED;");
  detail += std::string(" (iv) uniform most diverse, lowest quality") + (uniform ? " ok" : " FAILED");
  report(8, step && marginal && quality && uniform, detail);
}

void learning() {
  const ExperimentResult r = run_experiment(load("learning.json"), threads());
  const auto s = [&](const char *strategy, const char *metric) -> const Summary & {
    return r.summary(strategy, metric);
  };
  std::size_t excluded = 0;
  for (const auto &rec : r.records) excluded += rec.ok ? 0 : 1;

  const Summary &rm = s("mkdpp", "recall"), &rk = s("kdpp", "recall"), &rw = s("weighted", "recall");
  const bool recall = rm.mean >= rk.mean && rk.mean >= rw.mean && disjoint_above(rm, rw);
  const Summary &pw = s("weighted", "precision"), &pk = s("kdpp", "precision"), &pm = s("mkdpp", "precision"),
                &pu = s("uniform", "precision");
  const bool precision = pw.mean >= pk.mean && pk.mean >= pm.mean && pm.mean > pu.mean;
  bool utility = true;
  std::string utilities;
  for (const auto &strategy : r.config.strategies) {
    const std::string name = strategy.name();
    utilities += " " + name + " " + fmt("%.2f", s(name.c_str(), "utility").mean);
    if (name != "mkdpp") utility = utility && s("mkdpp", "utility").mean > s(name.c_str(), "utility").mean;
  }

  std::string detail = "learning, T=100:";
  detail += " (i) recall M-kDPP " + ci(rm) + " k-DPP " + ci(rk) + " weighted " + ci(rw) + (recall ? " ok;" : " FAILED;");
  detail += " (ii) cumulative precision weighted " + fmt("%.4f", pw.mean) + " k-DPP " + fmt("%.4f", pk.mean) +
            " M-kDPP " + fmt("%.4f", pm.mean) + " uniform " + fmt("%.4f", pu.mean) + (precision ? " ok;" : " FAILED;");
  detail += " (iii) utility" + utilities + (utility ? " ok" : " FAILED");
  if (excluded) detail += fmt("; %.0f runs excluded", double(excluded));
  report(9, recall && precision && utility, detail);
}

void determinism() {
  const std::string again = to_csv(run_experiment(load("fixed_quality.json"), 1));
  const bool same = !fixed_csv.empty() && again == fixed_csv;
  report(10, same,
         fmt("fixed-quality CSV rerun with a different thread count: %.0f bytes, ", double(again.size())) +
             (same ? "byte-identical" : "DIFFERS"));
}

}  // namespace

// Runs every criterion, or only the ids given on the command line. The
// report is also written to acceptance_report.txt. Exit status is nonzero
// only if the report could not be completed; each line carries its verdict.
int main(int argc, char **argv) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  std::vector<void (*)()> checks{dpp_sampling, kdpp_sampling, mdpp_stationarity, mdpp_union, mkdpp_union,
                                 esp,          determinant_identity, fixed_quality, learning, determinism};
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
  if (ids.empty())
    for (int id = 1; id <= 10; ++id) ids.push_back(id);
  try {
    for (int id : ids) {
      if (id < 1 || id > 10) {
        std::fprintf(stderr, "unknown criterion %s\n", std::to_string(id).c_str());
        return 2;
      }
      if (id == 10 && fixed_csv.empty()) fixed_csv = to_csv(run_experiment(load("fixed_quality.json"), threads()));
      checks[static_cast<std::size_t>(id - 1)]();
    }
  } catch (const std::exception &e) {
    std::printf("FAIL aborted: %s\n", e.what());
    return 1;
  }
  const double seconds = std::chrono::duration<double>(clock::now() - start).count();
  char summary[96];
  std::snprintf(summary, sizeof summary, "%d of %zu criteria failed (%.0f s)", failures, ids.size(), seconds);
  std::printf("%s\n", summary);
  write_file("acceptance_report.txt", report_text + summary + "\n");
  return 0;
}
