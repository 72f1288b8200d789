#ifndef MDPP_METRICS_HPP
#define MDPP_METRICS_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mdpp/kernel.hpp"

namespace mdpp {

/// Running mean; weeks of a trajectory are accumulated separately and merged.
struct MeanAccumulator {
  double sum = 0.0;
  std::size_t count = 0;

  void add(double value) {
    sum += value;
    ++count;
  }
  void merge(const MeanAccumulator &other) {
    sum += other.sum;
    count += other.count;
  }
  /// Throws UndefinedMetric when nothing was accumulated.
  double mean() const;
};

/// Mean pairwise similarity of each set with at least two items, one term per set.
MeanAccumulator within_set_similarity(std::span<const Subset> sets, const Matrix &sim);

/// One term per (t, i in Y_t): max_{j in Y_{t+lag}} sim(i, j).
MeanAccumulator cross_step_similarity(std::span<const Subset> sets, const Matrix &sim, std::size_t lag);

/// 1 - mean over days of mean pairwise similarity within the day's set.
double marginal_diversity(std::span<const Subset> sets, const Matrix &sim);

/// 1 - mean over (t, i in Y_t) of the similarity of i's closest item in Y_{t+lag}.
double step_diversity(std::span<const Subset> sets, const Matrix &sim, std::size_t lag);

/// Mean over days of the mean quality of the shown items.
MeanAccumulator set_quality(std::span<const Subset> sets, const Vector &quality);

/// Fraction of `preferred` shown at least once up to each step.
std::vector<double> recall_curve(std::span<const Subset> shown, const Subset &preferred);

/// Fraction of shown items that are preferred, per step or cumulatively.
std::vector<double> precision_curve(std::span<const Subset> shown, const Subset &preferred, bool cumulative);

/// Cumulative utility: the (l+1)-th showing of a preferred item earns 1/(l+1).
std::vector<double> utility_curve(std::span<const Subset> shown, const Subset &preferred);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Percentile bootstrap interval for the mean of `values`.
Interval bootstrap_ci(std::span<const double> values, double level, std::size_t n_resamples,
                      std::uint64_t seed);

double mean(std::span<const double> values);

}  // namespace mdpp

#endif  // MDPP_METRICS_HPP
