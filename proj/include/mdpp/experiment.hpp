#ifndef MDPP_EXPERIMENT_HPP
#define MDPP_EXPERIMENT_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mdpp/corpus.hpp"
#include "mdpp/learning.hpp"
#include "mdpp/metrics.hpp"

namespace mdpp {

enum class ExperimentKind { FixedQuality, Learning };

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::FixedQuality;
  std::uint64_t seed = 1;
  std::size_t runs = 20;
  std::vector<Strategy> strategies;
  std::size_t k = 5;
  std::size_t steps = 30;
  CorpusConfig corpus;         // corpus.seed is ignored; corpora are seeded from `seed`
  std::size_t neighbors = 150;
  double alpha = 5.0;          // fixed quality only
  std::size_t week_length = 7; // fixed quality: days per regenerated ground set
  double eta = 2.0;            // learning only
  std::vector<double> preference{0.7, 0.2, 0.1};
  std::size_t preferred_count = 50;
  std::size_t bootstrap_resamples = 10000;

  /// Throws InvalidArgument naming the first bad field.
  void validate() const;
};

/// Parses a JSON document; unknown keys are rejected. Missing keys keep
/// their defaults.
ExperimentConfig config_from_json(const std::string &text);
std::string config_to_json(const ExperimentConfig &config);

struct RunRecord {
  std::size_t run = 0;
  std::string strategy;
  bool ok = true;
  std::string error;  // why the run was excluded
  std::map<std::string, double> scalars;
  std::map<std::string, std::vector<double>> curves;
};

struct Summary {
  std::string strategy;
  std::string metric;
  std::size_t n = 0;
  double mean = 0.0;
  Interval ci95;
  Interval ci99;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<RunRecord> records;  // ordered by run, then strategy as configured
  std::vector<Summary> summaries;

  /// Per-run values of a scalar metric, or the last point of a curve, over
  /// the successful runs of `strategy`.
  std::vector<double> values(const std::string &strategy, const std::string &metric) const;
  const Summary &summary(const std::string &strategy, const std::string &metric) const;
};

/// Fixed-quality runs use weekly regenerated ground sets; learning runs
/// share one corpus and synthetic user. Runs execute on `threads` workers and
/// are collected in run order, so output does not depend on `threads`.
ExperimentResult run_experiment(const ExperimentConfig &config, std::size_t threads = 1);

/// Long-format CSV (run,strategy,metric,t,value) with the config echoed as
/// '#' lines and bootstrap summaries appended.
std::string to_csv(const ExperimentResult &result);

/// Shared double formatting for every CSV writer ("%.17g").
std::string format_double(double value);

}  // namespace mdpp

#endif  // MDPP_EXPERIMENT_HPP
