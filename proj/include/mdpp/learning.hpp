#ifndef MDPP_LEARNING_HPP
#define MDPP_LEARNING_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mdpp/corpus.hpp"
#include "mdpp/kernel.hpp"
#include "mdpp/random.hpp"

namespace mdpp {

enum class StrategyKind { Uniform, Weighted, KDpp, KDppHeuristic, MKDpp };

struct Strategy {
  StrategyKind kind = StrategyKind::KDpp;
  double threshold = 0.4;  // heuristic only: drop items this similar to the previous set

  /// "uniform", "weighted", "kdpp", "kdpp_heuristic_<threshold>", "mkdpp".
  std::string name() const;
  /// Inverse of name(); "kdpp_heuristic" alone uses the default threshold.
  static Strategy parse(std::string_view text);
};

struct QualityModel {
  Vector theta;
  double eta = 2.0;
};

struct Feedback {
  Subset preferred;
  Subset rejected;
};

struct SyntheticUser {
  Vector preference;
  Subset preferred_set;
};

/// q_i = exp(theta . f_i) for the rows f_i of `features`. Throws DynamicRange
/// if an exponent exceeds 700.
Vector quality_scores(const QualityModel &model, const Matrix &features);

/// exp(theta . f_i - max_j theta . f_j), floored at the smallest normal
/// double. Proportional to quality_scores wherever that is representable.
Vector relative_quality_scores(const QualityModel &model, const Matrix &features);

/// theta += eta * (mean f over preferred - mean f over rejected); an empty
/// side contributes nothing.
QualityModel update(const QualityModel &model, const Feedback &feedback, const Matrix &features);

/// Preferred set = the `count` items with the largest preference . f_i,
/// ties to the lower index.
SyntheticUser make_user(const Vector &preference, const Matrix &features, std::size_t count);

Feedback simulate_user(const SyntheticUser &user, const Subset &shown);

/// Inputs shared by every strategy for one selection.
struct SelectionContext {
  const Matrix &phi;
  const Matrix &sim;
  const Vector &quality;
};

/// One set of k items. MKDpp draws from the 2k-DPP-then-half initializer
/// when `previous` is empty and from the conditional k-DPP otherwise; the
/// heuristic filters against `previous` only. The DPP strategies sample
/// from the factored kernel (see ScaledKernel), so they stay exact once the
/// learned qualities span more than double precision can hold.
Subset select(const Strategy &strategy, const SelectionContext &context, std::size_t k,
              const std::optional<Subset> &previous, RandomSource &rng);

/// Sequential proportional draws without replacement.
Subset weighted_without_replacement(const Vector &weights, std::size_t k, RandomSource &rng);

struct LearningConfig {
  Strategy strategy;
  std::size_t k = 10;
  std::size_t steps = 100;
  double eta = 2.0;
  std::uint64_t seed = 1;
};

struct LearningStep {
  Subset shown;
  Feedback feedback;
  Vector theta;  // parameters used to score this step
};

/// Online loop: score, select, observe, update. Step t draws from
/// substream(t) of the seed.
std::vector<LearningStep> run_learning(const Corpus &corpus, const SyntheticUser &user,
                                       const LearningConfig &config);

}  // namespace mdpp

#endif  // MDPP_LEARNING_HPP
