#ifndef MDPP_CORPUS_HPP
#define MDPP_CORPUS_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mdpp/kernel.hpp"

namespace mdpp {

struct CorpusConfig {
  std::size_t n_items = 200;
  std::size_t n_topics = 10;
  std::size_t vocab_size = 500;
  double topic_concentration = 0.1;  // Dirichlet parameter of each item's topic mixture
  double topic_skew = 0.0;           // topic z is (z+1)^-skew times as popular as topic 0
  double term_concentration = 0.05;  // Dirichlet parameter of each topic's term distribution
  std::size_t doc_length = 80;       // tokens per synthetic document
  /// Optional story layer: items about the same story share a sparse term
  /// distribution, giving clusters of near-duplicate documents.
  std::size_t n_stories = 0;
  double story_skew = 1.0;   // story s is (s+1)^-skew times as popular as story 0
  double story_weight = 0.5; // fraction of tokens taken from the story
  /// Fraction of an item's topic mass taken from its story; story_weight
  /// when unset.
  std::optional<double> story_topic_weight;
  /// A story's mixture is (1 - spread) on its home topic plus spread times a
  /// draw from the topic prior.
  double story_spread = 0.0;
  std::uint64_t seed = 1;
};

struct Item {
  std::size_t id = 0;
  /// Sparse tf-idf weights as (term, weight), sorted by term, unit l2 norm.
  std::vector<std::pair<std::uint32_t, double>> terms;
  /// Topic mixture; nonnegative, sums to 1.
  Vector topics;
  /// Story index, or -1 without a story layer.
  long story = -1;
};

struct Corpus {
  std::vector<Item> items;
  /// Cosine similarity of the term vectors, unit diagonal.
  Matrix sim;
  /// Rows are the unit similarity features phi_i; empty until attached.
  Matrix phi;
  /// Proximity quality; empty until attached.
  Vector quality;

  std::size_t size() const { return items.size(); }
  /// Topic mixtures stacked as rows.
  Matrix topic_matrix() const;
};

/// Synthetic topic-model corpus: each document mixes topic-specific term
/// distributions, so cosine similarity tracks topic overlap.
Corpus generate_synthetic(const CorpusConfig &config);

/// Row i has 1/sqrt(m) on the m items most similar to i (self excluded,
/// ties to the lower index) and 0 elsewhere.
Matrix neighbor_features(const Matrix &sim, std::size_t m);

/// q_i = exp(alpha * sum_{j != i} sim(i, j)). Throws DynamicRange when an
/// exponent exceeds 700.
Vector proximity_quality(const Matrix &sim, double alpha);

/// Fills phi and quality; returns the corpus for chaining.
Corpus &attach_features(Corpus &corpus, std::size_t m, double alpha);

/// Cosine similarity matrix of sparse unit vectors.
Matrix cosine_similarity(const std::vector<Item> &items);

std::string corpus_to_json(const Corpus &corpus);
Corpus corpus_from_json(const std::string &text);

}  // namespace mdpp

#endif  // MDPP_CORPUS_HPP
