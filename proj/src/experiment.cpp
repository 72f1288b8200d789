#include "mdpp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <optional>
#include <set>
#include <thread>

#include <json.hpp>

#include "mdpp/error.hpp"
#include "mdpp/markov.hpp"
#include "mdpp/random.hpp"
#include "mdpp/sampler.hpp"

namespace mdpp {

namespace {

using nlohmann::json;

std::string_view kind_name(ExperimentKind kind) {
  return kind == ExperimentKind::FixedQuality ? "fixed_quality" : "learning";
}

std::uint64_t run_seed(const ExperimentConfig &config, std::size_t run) { return mix_seed(config.seed, run); }

std::uint64_t strategy_seed(std::uint64_t seed, const Strategy &strategy) {
  return mix_seed(seed, stable_hash(strategy.name()));
}

Vector padded_preference(const ExperimentConfig &config) {
  Vector p = Vector::Zero(static_cast<Eigen::Index>(config.corpus.n_topics));
  for (std::size_t i = 0; i < config.preference.size(); ++i) p[static_cast<Eigen::Index>(i)] = config.preference[i];
  return p;
}

std::vector<RunRecord> fixed_quality_run(const ExperimentConfig &config, std::size_t run) {
  const std::uint64_t seed = run_seed(config, run);
  const std::size_t weeks = (config.steps + config.week_length - 1) / config.week_length;
  std::vector<Corpus> corpora;
  corpora.reserve(weeks);
  for (std::size_t w = 0; w < weeks; ++w) {
    CorpusConfig cc = config.corpus;
    cc.seed = mix_seed(seed, mix_seed(stable_hash("week"), w));
    Corpus corpus = generate_synthetic(cc);
    attach_features(corpus, config.neighbors, config.alpha);
    corpora.push_back(std::move(corpus));
  }

  std::vector<RunRecord> records;
  for (const auto &strategy : config.strategies) {
    RunRecord record;
    record.run = run;
    record.strategy = strategy.name();
    const RandomSource root(strategy_seed(seed, strategy));
    MeanAccumulator within, lag1, lag2, quality;
    try {
      std::size_t day = 0;
      for (std::size_t w = 0; w < weeks; ++w) {
        const Corpus &corpus = corpora[w];
        const Vector relative = corpus.quality / corpus.quality.maxCoeff();
        const Kernel l = build_ensemble(corpus.quality, corpus.phi);
        std::vector<Subset> sets;
        std::optional<Subset> previous;
        for (std::size_t d = 0; d < config.week_length && day < config.steps; ++d, ++day) {
          RandomSource rng = root.substream(day + 1);
          Subset shown;
          // kDPP draws reuse the week's decomposition
          if (strategy.kind == StrategyKind::KDpp) shown = sample_kdpp(l, config.k, rng);
          else if (strategy.kind == StrategyKind::MKDpp && !previous) shown = mkdpp_init(l, config.k, rng).second;
          else shown = select(strategy, {corpus.phi, corpus.sim, corpus.quality}, config.k, previous, rng);
          sets.push_back(shown);
          previous = std::move(shown);
        }
        within.merge(within_set_similarity(sets, corpus.sim));
        lag1.merge(cross_step_similarity(sets, corpus.sim, 1));
        lag2.merge(cross_step_similarity(sets, corpus.sim, 2));
        quality.merge(set_quality(sets, relative));
      }
      record.scalars["marginal_diversity"] = 1.0 - within.mean();
      if (lag1.count) record.scalars["step_diversity_1"] = 1.0 - lag1.mean();
      if (lag2.count) record.scalars["step_diversity_2"] = 1.0 - lag2.mean();
      record.scalars["avg_quality"] = quality.mean();
    } catch (const Error &e) {
      record.ok = false;
      record.error = std::string(to_string(e.kind())) + ": " + e.what();
      record.scalars.clear();
    }
    records.push_back(std::move(record));
  }
  return records;
}

struct LearningSetup {
  Corpus corpus;
  SyntheticUser user;
};

LearningSetup learning_setup(const ExperimentConfig &config) {
  CorpusConfig cc = config.corpus;
  cc.seed = mix_seed(config.seed, stable_hash("corpus"));
  Corpus corpus = generate_synthetic(cc);
  corpus.phi = neighbor_features(corpus.sim, config.neighbors);
  SyntheticUser user = make_user(padded_preference(config), corpus.topic_matrix(), config.preferred_count);
  return {std::move(corpus), std::move(user)};
}

std::vector<RunRecord> learning_run(const ExperimentConfig &config, const LearningSetup &setup, std::size_t run) {
  const std::uint64_t seed = run_seed(config, run);
  std::vector<RunRecord> records;
  for (const auto &strategy : config.strategies) {
    RunRecord record;
    record.run = run;
    record.strategy = strategy.name();
    try {
      const auto log =
          run_learning(setup.corpus, setup.user, {strategy, config.k, config.steps, config.eta, strategy_seed(seed, strategy)});
      std::vector<Subset> shown;
      shown.reserve(log.size());
      for (const auto &step : log) shown.push_back(step.shown);
      record.curves["recall"] = recall_curve(shown, setup.user.preferred_set);
      record.curves["precision"] = precision_curve(shown, setup.user.preferred_set, true);
      record.curves["precision_daily"] = precision_curve(shown, setup.user.preferred_set, false);
      record.curves["utility"] = utility_curve(shown, setup.user.preferred_set);
    } catch (const Error &e) {
      record.ok = false;
      record.error = std::string(to_string(e.kind())) + ": " + e.what();
      record.curves.clear();
    }
    records.push_back(std::move(record));
  }
  return records;
}

template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto &th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

void ExperimentConfig::validate() const {
  auto bad = [](const std::string &what) { fail(ErrorKind::InvalidArgument, what); };
  if (runs < 1) bad("runs must be at least 1");
  if (strategies.empty()) bad("strategies must not be empty");
  std::set<std::string> names;
  for (const auto &s : strategies)
    if (!names.insert(s.name()).second) bad("duplicate strategy " + s.name());
  if (k < 1) bad("k must be at least 1");
  if (steps < 1) bad("steps must be at least 1");
  if (corpus.n_items < 2) bad("corpus.n_items must be at least 2");
  if (k > corpus.n_items) bad("k exceeds corpus.n_items");
  if (neighbors < 1 || neighbors >= corpus.n_items) bad("neighbors must satisfy 1 <= neighbors < corpus.n_items");
  if (week_length < 1) bad("week_length must be at least 1");
  if (!std::isfinite(alpha)) bad("alpha must be finite");
  if (!(eta > 0.0) || !std::isfinite(eta)) bad("eta must be positive");
  if (preference.size() > corpus.n_topics) bad("preference is longer than corpus.n_topics");
  for (double p : preference)
    if (!(p >= 0.0) || !std::isfinite(p)) bad("preference entries must be nonnegative");
  if (kind == ExperimentKind::Learning && (preferred_count < 1 || preferred_count > corpus.n_items))
    bad("preferred_count must be in [1, corpus.n_items]");
  if (bootstrap_resamples < 1) bad("bootstrap_resamples must be at least 1");
}

ExperimentConfig config_from_json(const std::string &text) {
  ExperimentConfig c;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception &e) {
    fail(ErrorKind::InvalidArgument, std::string("malformed config JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorKind::InvalidArgument, "config must be a JSON object");
  static const std::set<std::string> known{"experiment", "seed", "runs", "strategies", "k", "steps", "corpus",
                                           "neighbors", "alpha", "week_length", "eta", "preference",
                                           "preferred_count", "bootstrap_resamples", "threads", "out"};
  static const std::set<std::string> corpus_keys{"n_items", "n_topics", "vocab_size", "topic_concentration",
                                                 "topic_skew", "term_concentration", "doc_length",
                                                 "n_stories", "story_skew", "story_weight",
                                                 "story_topic_weight", "story_spread"};
  for (const auto &[key, value] : doc.items())
    if (!known.count(key)) fail(ErrorKind::InvalidArgument, "unknown config key '" + key + "'");
  try {
    if (doc.contains("experiment")) {
      const auto kind = doc["experiment"].get<std::string>();
      if (kind == "fixed_quality") c.kind = ExperimentKind::FixedQuality;
      else if (kind == "learning") c.kind = ExperimentKind::Learning;
      else fail(ErrorKind::InvalidArgument, "experiment must be fixed_quality or learning");
    }
    auto read = [&](const char *key, auto &field) {
      if (doc.contains(key)) field = doc[key].get<std::remove_reference_t<decltype(field)>>();
    };
    read("seed", c.seed);
    read("runs", c.runs);
    read("k", c.k);
    read("steps", c.steps);
    read("neighbors", c.neighbors);
    read("alpha", c.alpha);
    read("week_length", c.week_length);
    read("eta", c.eta);
    read("preference", c.preference);
    read("preferred_count", c.preferred_count);
    read("bootstrap_resamples", c.bootstrap_resamples);
    if (doc.contains("strategies"))
      for (const auto &name : doc["strategies"]) c.strategies.push_back(Strategy::parse(name.get<std::string>()));
    if (doc.contains("corpus")) {
      const auto &cj = doc["corpus"];
      if (!cj.is_object()) fail(ErrorKind::InvalidArgument, "corpus must be an object");
      for (const auto &[key, value] : cj.items())
        if (!corpus_keys.count(key)) fail(ErrorKind::InvalidArgument, "unknown corpus key '" + key + "'");
      auto read_corpus = [&](const char *key, auto &field) {
        if (cj.contains(key)) field = cj[key].get<std::remove_reference_t<decltype(field)>>();
      };
      read_corpus("n_items", c.corpus.n_items);
      read_corpus("n_topics", c.corpus.n_topics);
      read_corpus("vocab_size", c.corpus.vocab_size);
      read_corpus("topic_concentration", c.corpus.topic_concentration);
      read_corpus("topic_skew", c.corpus.topic_skew);
      read_corpus("term_concentration", c.corpus.term_concentration);
      read_corpus("doc_length", c.corpus.doc_length);
      read_corpus("n_stories", c.corpus.n_stories);
      read_corpus("story_skew", c.corpus.story_skew);
      read_corpus("story_weight", c.corpus.story_weight);
      if (cj.contains("story_topic_weight")) c.corpus.story_topic_weight = cj["story_topic_weight"].get<double>();
      read_corpus("story_spread", c.corpus.story_spread);
    }
  } catch (const json::exception &e) {
    fail(ErrorKind::InvalidArgument, std::string("bad config value: ") + e.what());
  }
  if (c.strategies.empty())
    for (const char *name : {"uniform", "weighted", "kdpp", "kdpp_heuristic_0.4", "mkdpp"})
      c.strategies.push_back(Strategy::parse(name));
  c.validate();
  return c;
}

std::string config_to_json(const ExperimentConfig &c) {
  json strategies = json::array();
  for (const auto &s : c.strategies) strategies.push_back(s.name());
  json corpus{{"n_items", c.corpus.n_items},
              {"n_topics", c.corpus.n_topics},
              {"vocab_size", c.corpus.vocab_size},
              {"topic_concentration", c.corpus.topic_concentration},
              {"topic_skew", c.corpus.topic_skew},
              {"term_concentration", c.corpus.term_concentration},
              {"doc_length", c.corpus.doc_length},
              {"n_stories", c.corpus.n_stories},
              {"story_skew", c.corpus.story_skew},
              {"story_weight", c.corpus.story_weight},
              {"story_spread", c.corpus.story_spread}};
  if (c.corpus.story_topic_weight) corpus["story_topic_weight"] = *c.corpus.story_topic_weight;
  const json doc{{"experiment", kind_name(c.kind)},
                 {"seed", c.seed},
                 {"runs", c.runs},
                 {"strategies", strategies},
                 {"k", c.k},
                 {"steps", c.steps},
                 {"corpus", corpus},
                 {"neighbors", c.neighbors},
                 {"alpha", c.alpha},
                 {"week_length", c.week_length},
                 {"eta", c.eta},
                 {"preference", c.preference},
                 {"preferred_count", c.preferred_count},
                 {"bootstrap_resamples", c.bootstrap_resamples}};
  return doc.dump();
}

std::vector<double> ExperimentResult::values(const std::string &strategy, const std::string &metric) const {
  std::vector<double> out;
  for (const auto &r : records) {
    if (r.strategy != strategy || !r.ok) continue;
    if (auto it = r.scalars.find(metric); it != r.scalars.end()) out.push_back(it->second);
    else if (auto jt = r.curves.find(metric); jt != r.curves.end() && !jt->second.empty())
      out.push_back(jt->second.back());
  }
  return out;
}

const Summary &ExperimentResult::summary(const std::string &strategy, const std::string &metric) const {
  for (const auto &s : summaries)
    if (s.strategy == strategy && s.metric == metric) return s;
  fail(ErrorKind::UndefinedMetric, "no summary for " + strategy + "/" + metric);
}

ExperimentResult run_experiment(const ExperimentConfig &config, std::size_t threads) {
  config.validate();
  ExperimentResult result{config, {}, {}};
  std::vector<std::vector<RunRecord>> per_run(config.runs);
  if (config.kind == ExperimentKind::FixedQuality) {
    parallel_for(config.runs, threads, [&](std::size_t r) { per_run[r] = fixed_quality_run(config, r); });
  } else {
    const LearningSetup setup = learning_setup(config);
    parallel_for(config.runs, threads, [&](std::size_t r) { per_run[r] = learning_run(config, setup, r); });
  }
  for (auto &records : per_run)
    for (auto &r : records) result.records.push_back(std::move(r));

  for (const auto &strategy : config.strategies) {
    const std::string name = strategy.name();
    std::set<std::string> metrics;
    for (const auto &r : result.records)
      if (r.strategy == name && r.ok) {
        for (const auto &[m, v] : r.scalars) metrics.insert(m);
        for (const auto &[m, v] : r.curves) metrics.insert(m);
      }
    for (const auto &metric : metrics) {
      const auto v = result.values(name, metric);
      Summary s;
      s.strategy = name;
      s.metric = metric;
      s.n = v.size();
      s.mean = mean(v);
      if (v.size() >= 2) {
        const std::uint64_t seed = mix_seed(config.seed, stable_hash(name + "/" + metric));
        s.ci95 = bootstrap_ci(v, 0.95, config.bootstrap_resamples, seed);
        s.ci99 = bootstrap_ci(v, 0.99, config.bootstrap_resamples, seed);
      } else {
        s.ci95 = s.ci99 = {s.mean, s.mean};
      }
      result.summaries.push_back(s);
    }
  }
  return result;
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string to_csv(const ExperimentResult &result) {
  std::string out = "# mdpp experiment\n# config: " + config_to_json(result.config) + "\n";
  for (const auto &r : result.records)
    if (!r.ok) out += "# excluded: run " + std::to_string(r.run) + " strategy " + r.strategy + ": " + r.error + "\n";
  out += "run,strategy,metric,t,value\n";
  for (const auto &r : result.records) {
    const std::string prefix = std::to_string(r.run) + "," + r.strategy + ",";
    for (const auto &[metric, value] : r.scalars) out += prefix + metric + ",," + format_double(value) + "\n";
    for (const auto &[metric, curve] : r.curves)
      for (std::size_t t = 0; t < curve.size(); ++t)
        out += prefix + metric + "," + std::to_string(t + 1) + "," + format_double(curve[t]) + "\n";
  }
  for (const auto &s : result.summaries) {
    const std::string suffix = "," + s.strategy + "," + s.metric + ",,";
    out += "n" + suffix + std::to_string(s.n) + "\n";
    out += "mean" + suffix + format_double(s.mean) + "\n";
    out += "ci95_low" + suffix + format_double(s.ci95.low) + "\n";
    out += "ci95_high" + suffix + format_double(s.ci95.high) + "\n";
    out += "ci99_low" + suffix + format_double(s.ci99.low) + "\n";
    out += "ci99_high" + suffix + format_double(s.ci99.high) + "\n";
  }
  return out;
}

}  // namespace mdpp
