#include "mdpp/learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mdpp/error.hpp"
#include "mdpp/markov.hpp"
#include "mdpp/sampler.hpp"
#include "mdpp/scaled.hpp"

namespace mdpp {

std::string Strategy::name() const {
  switch (kind) {
    case StrategyKind::Uniform: return "uniform";
    case StrategyKind::Weighted: return "weighted";
    case StrategyKind::KDpp: return "kdpp";
    case StrategyKind::MKDpp: return "mkdpp";
    case StrategyKind::KDppHeuristic: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "kdpp_heuristic_%g", threshold);
      return buf;
    }
  }
  return "unknown";
}

Strategy Strategy::parse(std::string_view text) {
  if (text == "uniform") return {StrategyKind::Uniform};
  if (text == "weighted") return {StrategyKind::Weighted};
  if (text == "kdpp") return {StrategyKind::KDpp};
  if (text == "mkdpp") return {StrategyKind::MKDpp};
  constexpr std::string_view prefix = "kdpp_heuristic";
  if (text.starts_with(prefix)) {
    Strategy s{StrategyKind::KDppHeuristic};
    std::string_view rest = text.substr(prefix.size());
    if (rest.empty()) return s;
    if (rest.front() == '_') {
      const std::string number(rest.substr(1));
      char *end = nullptr;
      s.threshold = std::strtod(number.c_str(), &end);
      if (!number.empty() && end == number.c_str() + number.size() && std::isfinite(s.threshold)) return s;
    }
  }
  fail(ErrorKind::InvalidArgument, "unknown strategy '" + std::string(text) + "'");
}

Vector quality_scores(const QualityModel &model, const Matrix &features) {
  if (model.theta.size() != features.cols())
    fail(ErrorKind::InvalidArgument, "theta has dimension " + std::to_string(model.theta.size()) +
                                         " but features have " + std::to_string(features.cols()));
  const Vector score = features * model.theta;
  if (score.size() && score.maxCoeff() > 700.0)
    fail(ErrorKind::DynamicRange, "theta . f exceeds 700; use relative quality scores");
  return score.array().exp();
}

Vector relative_quality_scores(const QualityModel &model, const Matrix &features) {
  if (model.theta.size() != features.cols())
    fail(ErrorKind::InvalidArgument, "theta has dimension " + std::to_string(model.theta.size()) +
                                         " but features have " + std::to_string(features.cols()));
  const Vector score = features * model.theta;
  if (!score.allFinite()) fail(ErrorKind::NumericOverflow, "non-finite theta . f");
  const double top = score.size() ? score.maxCoeff() : 0.0;
  return (score.array() - top).exp().max(std::numeric_limits<double>::min());
}

QualityModel update(const QualityModel &model, const Feedback &feedback, const Matrix &features) {
  QualityModel next = model;
  auto side_mean = [&](const Subset &side) {
    Vector total = Vector::Zero(features.cols());
    for (std::size_t i : side) total += features.row(static_cast<Eigen::Index>(i)).transpose();
    return Vector(total / static_cast<double>(side.size()));
  };
  if (!feedback.preferred.empty()) next.theta += model.eta * side_mean(feedback.preferred);
  if (!feedback.rejected.empty()) next.theta -= model.eta * side_mean(feedback.rejected);
  return next;
}

SyntheticUser make_user(const Vector &preference, const Matrix &features, std::size_t count) {
  if (preference.size() != features.cols())
    fail(ErrorKind::InvalidArgument, "preference dimension does not match the features");
  if ((preference.array() < 0.0).any()) fail(ErrorKind::InvalidArgument, "preference must be nonnegative");
  const auto n = static_cast<std::size_t>(features.rows());
  if (count > n) fail(ErrorKind::InvalidArgument, "more preferred items than items");
  const Vector score = features * preference;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return score[static_cast<Eigen::Index>(a)] > score[static_cast<Eigen::Index>(b)];
  });
  order.resize(count);
  return {preference, Subset(n, std::move(order))};
}

Feedback simulate_user(const SyntheticUser &user, const Subset &shown) {
  std::vector<std::size_t> liked, disliked;
  for (std::size_t i : shown) (user.preferred_set.contains(i) ? liked : disliked).push_back(i);
  return {Subset(shown.ground_size(), std::move(liked)), Subset(shown.ground_size(), std::move(disliked))};
}

Subset weighted_without_replacement(const Vector &weights, std::size_t k, RandomSource &rng) {
  const auto n = static_cast<std::size_t>(weights.size());
  if (k > n) fail(ErrorKind::InfeasibleCardinality, "k exceeds the number of items");
  std::vector<double> w(weights.data(), weights.data() + n);
  std::vector<std::size_t> picked;
  picked.reserve(k);
  for (std::size_t draw = 0; draw < k; ++draw) {
    double total = 0.0;
    for (double x : w) total += x;
    if (!(total > 0.0)) fail(ErrorKind::InfeasibleCardinality, "fewer than k items have positive weight");
    const double u = rng.uniform() * total;
    double acc = 0.0;
    std::size_t choice = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (w[i] <= 0.0) continue;
      choice = i;
      acc += w[i];
      if (u < acc) break;
    }
    picked.push_back(choice);
    w[choice] = 0.0;
  }
  return Subset(n, std::move(picked));
}

Subset select(const Strategy &strategy, const SelectionContext &context, std::size_t k,
              const std::optional<Subset> &previous, RandomSource &rng) {
  const auto n = static_cast<std::size_t>(context.quality.size());
  if (k > n) fail(ErrorKind::InfeasibleCardinality, "k exceeds the number of items");
  switch (strategy.kind) {
    case StrategyKind::Uniform:
      return weighted_without_replacement(Vector::Ones(static_cast<Eigen::Index>(n)), k, rng);
    case StrategyKind::Weighted:
      return weighted_without_replacement(context.quality, k, rng);
    case StrategyKind::KDpp:
      return sample_kdpp(ScaledKernel::from_quality(context.quality, context.phi), k, rng);
    case StrategyKind::KDppHeuristic: {
      std::vector<std::size_t> keep;
      if (previous && !previous->empty()) {
        for (std::size_t i = 0; i < n; ++i) {
          double closest = -std::numeric_limits<double>::infinity();
          for (std::size_t j : *previous)
            closest = std::max(closest, context.sim(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
          if (closest <= strategy.threshold) keep.push_back(i);
        }
      }
      const ScaledKernel l = ScaledKernel::from_quality(context.quality, context.phi);
      if (!previous || previous->empty() || keep.size() == n) return sample_kdpp(l, k, rng);
      if (keep.size() < k) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "threshold %g leaves %zu items, fewer than k = %zu", strategy.threshold,
                      keep.size(), k);
        fail(ErrorKind::InfeasibleCardinality, buf);
      }
      const Subset local = sample_kdpp(l.principal(keep), k, rng);
      return Subset::lift(local, keep, n);
    }
    case StrategyKind::MKDpp: {
      if (!previous || previous->empty())
        return mkdpp_init(build_ensemble(context.quality, context.phi), k, rng).second;
      if (previous->ground_size() != n)
        fail(ErrorKind::InvalidArgument, "previous set does not match the ground set");
      const Subset rest = previous->complement();
      if (rest.size() < k)
        fail(ErrorKind::InfeasibleCardinality, "only " + std::to_string(rest.size()) +
                                                   " items remain outside the previous set");
      const ScaledKernel l = ScaledKernel::from_quality(context.quality, context.phi);
      return Subset::lift(sample_kdpp(l.conditional(*previous), k, rng), rest.indices(), n);
    }
  }
  fail(ErrorKind::InvalidArgument, "unknown strategy");
}

std::vector<LearningStep> run_learning(const Corpus &corpus, const SyntheticUser &user,
                                       const LearningConfig &config) {
  if (config.k < 1 || config.steps < 1) fail(ErrorKind::InvalidArgument, "k and steps must be positive");
  if (!(config.eta > 0.0) || !std::isfinite(config.eta)) fail(ErrorKind::InvalidArgument, "eta must be positive");
  if (corpus.phi.rows() != static_cast<Eigen::Index>(corpus.size()))
    fail(ErrorKind::InvalidArgument, "corpus has no similarity features attached");
  const Matrix features = corpus.topic_matrix();
  QualityModel model{Vector::Zero(features.cols()), config.eta};
  const RandomSource root(config.seed);
  std::vector<LearningStep> log;
  log.reserve(config.steps);
  std::optional<Subset> previous;
  for (std::size_t t = 1; t <= config.steps; ++t) {
    RandomSource rng = root.substream(t);
    const Vector quality = relative_quality_scores(model, features);
    Subset shown = select(config.strategy, {corpus.phi, corpus.sim, quality}, config.k, previous, rng);
    Feedback feedback = simulate_user(user, shown);
    log.push_back({shown, feedback, model.theta});
    model = update(model, feedback, features);
    previous = std::move(shown);
  }
  return log;
}

}  // namespace mdpp
