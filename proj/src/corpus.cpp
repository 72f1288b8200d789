#include "mdpp/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <json.hpp>

#include "mdpp/error.hpp"
#include "mdpp/random.hpp"

namespace mdpp {

namespace {

Vector dirichlet(const Vector &concentration, std::mt19937_64 &engine) {
  Vector x(concentration.size());
  for (;;) {
    for (Eigen::Index i = 0; i < x.size(); ++i)
      x[i] = std::gamma_distribution<double>(concentration[i], 1.0)(engine);
    const double total = x.sum();
    // tiny concentrations can underflow every coordinate; redraw
    if (total > 0.0 && std::isfinite(total)) return x / total;
  }
}

std::size_t categorical(const Vector &p, RandomSource &rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return static_cast<std::size_t>(i);
  }
  // round-off at the top of the range: last positive entry
  for (Eigen::Index i = p.size() - 1; i > 0; --i)
    if (p[i] > 0.0) return static_cast<std::size_t>(i);
  return 0;
}

}  // namespace

Matrix Corpus::topic_matrix() const {
  if (items.empty()) return Matrix(0, 0);
  Matrix f(static_cast<Eigen::Index>(items.size()), items.front().topics.size());
  for (std::size_t i = 0; i < items.size(); ++i) f.row(static_cast<Eigen::Index>(i)) = items[i].topics.transpose();
  return f;
}

Corpus generate_synthetic(const CorpusConfig &config) {
  if (config.n_items < 1 || config.n_topics < 1 || config.vocab_size < 1 || config.doc_length < 1)
    fail(ErrorKind::InvalidArgument, "corpus counts must be at least 1");
  if (!(config.topic_concentration > 0.0) || !(config.term_concentration > 0.0))
    fail(ErrorKind::InvalidArgument, "corpus concentrations must be positive");
  if (!(config.topic_skew >= 0.0) || !std::isfinite(config.topic_skew))
    fail(ErrorKind::InvalidArgument, "topic_skew must be a nonnegative number");
  if (!(config.story_skew >= 0.0) || !std::isfinite(config.story_skew))
    fail(ErrorKind::InvalidArgument, "story_skew must be a nonnegative number");
  if (!(config.story_weight >= 0.0 && config.story_weight <= 1.0))
    fail(ErrorKind::InvalidArgument, "story_weight must be in [0, 1]");
  const double story_topic_weight = config.story_topic_weight.value_or(config.story_weight);
  if (!(story_topic_weight >= 0.0 && story_topic_weight <= 1.0))
    fail(ErrorKind::InvalidArgument, "story_topic_weight must be in [0, 1]");
  if (!(config.story_spread >= 0.0 && config.story_spread <= 1.0))
    fail(ErrorKind::InvalidArgument, "story_spread must be in [0, 1]");

  RandomSource root(config.seed);
  RandomSource topic_rng = root.substream(stable_hash("topics"));
  std::vector<Vector> term_dists;
  term_dists.reserve(config.n_topics);
  for (std::size_t z = 0; z < config.n_topics; ++z)
    term_dists.push_back(
        dirichlet(Vector::Constant(static_cast<Eigen::Index>(config.vocab_size), config.term_concentration),
                  topic_rng.engine()));

  // topic z has prior weight proportional to (z + 1)^-skew, averaging to topic_concentration
  Vector topic_prior(static_cast<Eigen::Index>(config.n_topics));
  for (Eigen::Index z = 0; z < topic_prior.size(); ++z) topic_prior[z] = std::pow(double(z + 1), -config.topic_skew);
  topic_prior *= config.topic_concentration * static_cast<double>(config.n_topics) / topic_prior.sum();

  const auto n = config.n_items;
  const auto v = config.vocab_size;
  std::vector<Item> items(n);
  std::vector<std::vector<std::uint32_t>> counts(n, std::vector<std::uint32_t>(v, 0));
  std::vector<std::size_t> df(v, 0);
  std::vector<Vector> story_dists;
  std::vector<Vector> story_topics;
  Vector story_popularity;
  if (config.n_stories) {
    RandomSource story_rng = root.substream(stable_hash("stories"));
    for (std::size_t st = 0; st < config.n_stories; ++st)
      story_dists.push_back(
          dirichlet(Vector::Constant(static_cast<Eigen::Index>(config.vocab_size), config.term_concentration),
                    story_rng.engine()));
    story_popularity.resize(static_cast<Eigen::Index>(config.n_stories));
    for (Eigen::Index st = 0; st < story_popularity.size(); ++st)
      story_popularity[st] = std::pow(double(st + 1), -config.story_skew);
    story_popularity /= story_popularity.sum();
    // a story belongs to one home topic, optionally blurred toward the prior
    RandomSource mixture_rng = root.substream(stable_hash("story topics"));
    for (std::size_t st = 0; st < config.n_stories; ++st) {
      Vector home = Vector::Zero(static_cast<Eigen::Index>(config.n_topics));
      home[static_cast<Eigen::Index>(st % config.n_topics)] = 1.0;
      if (config.story_spread > 0.0)
        home = (1.0 - config.story_spread) * home + config.story_spread * dirichlet(topic_prior, mixture_rng.engine());
      story_topics.push_back(std::move(home));
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    RandomSource doc_rng = root.substream(mix_seed(stable_hash("document"), i));
    items[i].id = i;
    items[i].topics = config.n_topics == 1 ? Vector::Ones(1)
                                           : dirichlet(topic_prior, doc_rng.engine());
    if (config.n_stories) {
      const std::size_t st = categorical(story_popularity, doc_rng);
      items[i].story = static_cast<long>(st);
      items[i].topics = (1.0 - story_topic_weight) * items[i].topics + story_topic_weight * story_topics[st];
    }
    for (std::size_t token = 0; token < config.doc_length; ++token) {
      if (config.n_stories && doc_rng.uniform() < config.story_weight) {
        ++counts[i][categorical(story_dists[static_cast<std::size_t>(items[i].story)], doc_rng)];
        continue;
      }
      const std::size_t z = categorical(items[i].topics, doc_rng);
      ++counts[i][categorical(term_dists[z], doc_rng)];
    }
    for (std::size_t w = 0; w < v; ++w) df[w] += counts[i][w] > 0;
  }

  // sublinear tf times smoothed idf, l2-normalized
  for (std::size_t i = 0; i < n; ++i) {
    double norm2 = 0.0;
    for (std::size_t w = 0; w < v; ++w) {
      if (!counts[i][w]) continue;
      const double tf = 1.0 + std::log(static_cast<double>(counts[i][w]));
      const double idf = std::log((1.0 + n) / (1.0 + df[w])) + 1.0;
      items[i].terms.emplace_back(static_cast<std::uint32_t>(w), tf * idf);
      norm2 += tf * idf * tf * idf;
    }
    const double norm = std::sqrt(norm2);
    for (auto &term : items[i].terms) term.second /= norm;
  }

  Corpus corpus;
  corpus.sim = cosine_similarity(items);
  corpus.items = std::move(items);
  return corpus;
}

Matrix cosine_similarity(const std::vector<Item> &items) {
  const auto n = static_cast<Eigen::Index>(items.size());
  std::uint32_t vocab = 0;
  for (const auto &item : items)
    for (const auto &[term, w] : item.terms) vocab = std::max(vocab, term + 1);
  Matrix x = Matrix::Zero(n, vocab);
  for (Eigen::Index i = 0; i < n; ++i)
    for (const auto &[term, w] : items[static_cast<std::size_t>(i)].terms) x(i, term) = w;
  const Vector norms = x.rowwise().norm();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (norms[i] == 0.0) fail(ErrorKind::InvalidArgument, "item " + std::to_string(i) + " has an empty term vector");
    x.row(i) /= norms[i];
  }
  Matrix sim = x * x.transpose();
  sim = (0.5 * (sim + sim.transpose())).cwiseMax(-1.0).cwiseMin(1.0);
  sim.diagonal().setOnes();
  return sim;
}

Matrix neighbor_features(const Matrix &sim, std::size_t m) {
  const auto n = static_cast<std::size_t>(sim.rows());
  if (sim.cols() != sim.rows()) fail(ErrorKind::InvalidArgument, "similarity matrix must be square");
  if (m < 1 || m >= n)
    fail(ErrorKind::InvalidArgument, "neighbor count m=" + std::to_string(m) + " must satisfy 1 <= m < N=" +
                                         std::to_string(n));
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  Matrix phi = Matrix::Zero(sim.rows(), sim.cols());
  std::vector<std::size_t> order;
  order.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    order.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) order.push_back(j);
    const auto row = static_cast<Eigen::Index>(i);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        const double sa = sim(row, static_cast<Eigen::Index>(a));
                        const double sb = sim(row, static_cast<Eigen::Index>(b));
                        return sa != sb ? sa > sb : a < b;
                      });
    for (std::size_t r = 0; r < m; ++r) phi(row, static_cast<Eigen::Index>(order[r])) = scale;
  }
  return phi;
}

Vector proximity_quality(const Matrix &sim, double alpha) {
  if (!std::isfinite(alpha)) fail(ErrorKind::InvalidArgument, "alpha must be finite");
  Vector q(sim.rows());
  for (Eigen::Index i = 0; i < sim.rows(); ++i) {
    const double d = sim.row(i).sum() - sim(i, i);
    const double exponent = alpha * d;
    if (exponent > 700.0)
      fail(ErrorKind::DynamicRange, "alpha*d_i = " + std::to_string(exponent) + " for item " + std::to_string(i) +
                                        "; use a smaller alpha");
    q[i] = std::exp(exponent);
  }
  return q;
}

Corpus &attach_features(Corpus &corpus, std::size_t m, double alpha) {
  corpus.phi = neighbor_features(corpus.sim, m);
  corpus.quality = proximity_quality(corpus.sim, alpha);
  return corpus;
}

std::string corpus_to_json(const Corpus &corpus) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto &item : corpus.items) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto &[term, w] : item.terms) terms.push_back({term, w});
    items.push_back({{"id", item.id},
                     {"terms", terms},
                     {"topics", std::vector<double>(item.topics.data(), item.topics.data() + item.topics.size())}});
  }
  nlohmann::json doc{{"n_items", corpus.items.size()}, {"items", items}};
  if (corpus.quality.size())
    doc["quality"] = std::vector<double>(corpus.quality.data(), corpus.quality.data() + corpus.quality.size());
  return doc.dump();
}

Corpus corpus_from_json(const std::string &text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
    Corpus corpus;
    for (const auto &entry : doc.at("items")) {
      Item item;
      item.id = entry.at("id").get<std::size_t>();
      for (const auto &t : entry.at("terms"))
        item.terms.emplace_back(t.at(0).get<std::uint32_t>(), t.at(1).get<double>());
      const auto topics = entry.at("topics").get<std::vector<double>>();
      item.topics = Eigen::Map<const Vector>(topics.data(), static_cast<Eigen::Index>(topics.size()));
      corpus.items.push_back(std::move(item));
    }
    corpus.sim = cosine_similarity(corpus.items);
    if (doc.contains("quality")) {
      const auto q = doc["quality"].get<std::vector<double>>();
      corpus.quality = Eigen::Map<const Vector>(q.data(), static_cast<Eigen::Index>(q.size()));
    }
    return corpus;
  } catch (const nlohmann::json::exception &e) {
    fail(ErrorKind::InvalidArgument, std::string("malformed corpus JSON: ") + e.what());
  }
}

}  // namespace mdpp
