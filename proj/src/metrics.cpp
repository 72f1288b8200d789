#include "mdpp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mdpp/error.hpp"
#include "mdpp/random.hpp"

namespace mdpp {

double MeanAccumulator::mean() const {
  if (count == 0) fail(ErrorKind::UndefinedMetric, "no terms to average");
  return sum / static_cast<double>(count);
}

MeanAccumulator within_set_similarity(std::span<const Subset> sets, const Matrix &sim) {
  MeanAccumulator acc;
  for (const auto &set : sets) {
    if (set.size() < 2) continue;
    double total = 0.0;
    for (std::size_t a = 0; a < set.size(); ++a)
      for (std::size_t b = a + 1; b < set.size(); ++b)
        total += sim(static_cast<Eigen::Index>(set[a]), static_cast<Eigen::Index>(set[b]));
    acc.add(total / (0.5 * static_cast<double>(set.size() * (set.size() - 1))));
  }
  return acc;
}

MeanAccumulator cross_step_similarity(std::span<const Subset> sets, const Matrix &sim, std::size_t lag) {
  if (lag < 1) fail(ErrorKind::InvalidArgument, "lag must be at least 1");
  MeanAccumulator acc;
  for (std::size_t t = 0; t + lag < sets.size(); ++t) {
    const Subset &later = sets[t + lag];
    if (later.empty()) continue;
    for (std::size_t i : sets[t]) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t j : later) best = std::max(best, sim(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      acc.add(best);
    }
  }
  return acc;
}

double marginal_diversity(std::span<const Subset> sets, const Matrix &sim) {
  return 1.0 - within_set_similarity(sets, sim).mean();
}

double step_diversity(std::span<const Subset> sets, const Matrix &sim, std::size_t lag) {
  if (sets.size() <= lag) fail(ErrorKind::UndefinedMetric, "trajectory shorter than lag + 1");
  return 1.0 - cross_step_similarity(sets, sim, lag).mean();
}

MeanAccumulator set_quality(std::span<const Subset> sets, const Vector &quality) {
  MeanAccumulator acc;
  for (const auto &set : sets) {
    if (set.empty()) continue;
    double total = 0.0;
    for (std::size_t i : set) total += quality[static_cast<Eigen::Index>(i)];
    acc.add(total / static_cast<double>(set.size()));
  }
  return acc;
}

std::vector<double> recall_curve(std::span<const Subset> shown, const Subset &preferred) {
  if (preferred.empty()) fail(ErrorKind::UndefinedMetric, "recall with an empty preferred set");
  std::vector<bool> seen(preferred.ground_size(), false);
  std::size_t found = 0;
  std::vector<double> curve;
  curve.reserve(shown.size());
  for (const auto &set : shown) {
    for (std::size_t i : set)
      if (preferred.contains(i) && !seen[i]) {
        seen[i] = true;
        ++found;
      }
    curve.push_back(static_cast<double>(found) / static_cast<double>(preferred.size()));
  }
  return curve;
}

std::vector<double> precision_curve(std::span<const Subset> shown, const Subset &preferred, bool cumulative) {
  std::vector<double> curve;
  curve.reserve(shown.size());
  std::size_t hits_total = 0, shown_total = 0;
  for (const auto &set : shown) {
    std::size_t hits = 0;
    for (std::size_t i : set) hits += preferred.contains(i);
    hits_total += hits;
    shown_total += set.size();
    const std::size_t h = cumulative ? hits_total : hits;
    const std::size_t s = cumulative ? shown_total : set.size();
    curve.push_back(s ? static_cast<double>(h) / static_cast<double>(s) : 0.0);
  }
  return curve;
}

std::vector<double> utility_curve(std::span<const Subset> shown, const Subset &preferred) {
  std::vector<std::size_t> times_shown(preferred.ground_size(), 0);
  std::vector<double> curve;
  curve.reserve(shown.size());
  double total = 0.0;
  for (const auto &set : shown) {
    for (std::size_t i : set)
      if (preferred.contains(i)) total += 1.0 / static_cast<double>(++times_shown[i]);
    curve.push_back(total);
  }
  return curve;
}

double mean(std::span<const double> values) {
  if (values.empty()) fail(ErrorKind::UndefinedMetric, "mean of no values");
  double total = 0.0;
  for (double v : values) total += v;
  return total / static_cast<double>(values.size());
}

Interval bootstrap_ci(std::span<const double> values, double level, std::size_t n_resamples, std::uint64_t seed) {
  if (values.size() < 2) fail(ErrorKind::InvalidArgument, "bootstrap needs at least 2 values");
  if (!(level > 0.0 && level < 1.0)) fail(ErrorKind::InvalidArgument, "confidence level must be in (0, 1)");
  if (n_resamples < 1) fail(ErrorKind::InvalidArgument, "bootstrap needs at least one resample");
  RandomSource rng(seed);
  std::vector<double> means(n_resamples);
  for (auto &m : means) {
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) total += values[rng.uniform_index(values.size())];
    m = total / static_cast<double>(values.size());
  }
  std::sort(means.begin(), means.end());
  // nearest-rank percentiles
  const double tail = 0.5 * (1.0 - level);
  auto rank = [&](double p) {
    const auto r = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n_resamples)));
    return means[std::clamp<std::size_t>(r, 1, n_resamples) - 1];
  };
  return {rank(tail), rank(1.0 - tail)};
}

}  // namespace mdpp
