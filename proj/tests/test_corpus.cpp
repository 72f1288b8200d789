#include <doctest.h>

#include <cmath>

#include "mdpp/corpus.hpp"
#include "mdpp/error.hpp"

using namespace mdpp;

namespace {

CorpusConfig small_config() {
  CorpusConfig c;
  c.n_items = 60;
  c.n_topics = 5;
  c.vocab_size = 300;
  c.seed = 7;
  return c;
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("generated items satisfy their invariants") {
  Corpus corpus = generate_synthetic(small_config());
  REQUIRE(corpus.size() == 60);
  for (const auto &item : corpus.items) {
    CHECK(std::abs(item.topics.sum() - 1.0) < 1e-8);
    CHECK(item.topics.minCoeff() >= 0.0);
    double norm2 = 0.0;
    for (const auto &[term, w] : item.terms) {
      CHECK(w > 0.0);
      CHECK(term < 300u);
      norm2 += w * w;
    }
    CHECK(std::abs(norm2 - 1.0) < 1e-8);
  }
  CHECK((corpus.sim - corpus.sim.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((corpus.sim.diagonal().array() - 1.0).abs().maxCoeff() < 1e-12);

  attach_features(corpus, 10, 0.5);
  CHECK((corpus.phi.rowwise().norm().array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(corpus.quality.minCoeff() > 0.0);
}

TEST_CASE("generation is deterministic") {
  const Corpus a = generate_synthetic(small_config());
  const Corpus b = generate_synthetic(small_config());
  CHECK(a.sim == b.sim);
  CHECK(a.topic_matrix() == b.topic_matrix());
  CorpusConfig other = small_config();
  other.seed = 8;
  CHECK(generate_synthetic(other).sim != a.sim);
}

TEST_CASE("one topic gives identical mixtures") {
  CorpusConfig c = small_config();
  c.n_topics = 1;
  const Corpus corpus = generate_synthetic(c);
  for (const auto &item : corpus.items) CHECK(item.topics[0] == 1.0);
}

TEST_CASE("generator regime") {
  CorpusConfig c;
  c.n_items = 200;
  c.n_topics = 10;
  c.vocab_size = 500;
  c.seed = 3;
  const Corpus corpus = generate_synthetic(c);
  const double n = 200.0;
  const double off = (corpus.sim.sum() - corpus.sim.trace()) / (n * (n - 1.0));
  CHECK(off > 0.0);
  CHECK(off < 0.5);
}

TEST_CASE("story layer") {
  CorpusConfig c = small_config();
  c.n_stories = 4;
  c.story_weight = 0.8;
  const Corpus corpus = generate_synthetic(c);
  double same = 0.0, other = 0.0;
  int n_same = 0, n_other = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    CHECK(corpus.items[i].story >= 0);
    CHECK(corpus.items[i].story < 4);
    for (std::size_t j = 0; j < i; ++j) {
      const double s = corpus.sim(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (corpus.items[i].story == corpus.items[j].story) same += s, ++n_same;
      else other += s, ++n_other;
    }
  }
  CHECK(same / n_same > other / n_other);

  // without a story layer the new fields change nothing
  CorpusConfig plain = small_config();
  plain.story_spread = 0.7;
  CHECK(generate_synthetic(plain).sim == generate_synthetic(small_config()).sim);

  CorpusConfig bad = small_config();
  bad.story_weight = 1.5;
  CHECK_THROWS_AS(generate_synthetic(bad), Error);
  bad = small_config();
  bad.story_topic_weight = -0.1;
  CHECK_THROWS_AS(generate_synthetic(bad), Error);
  bad = small_config();
  bad.n_items = 0;
  CHECK_THROWS_AS(generate_synthetic(bad), Error);
}

TEST_CASE("identical term vectors have similarity one") {
  std::vector<Item> items(2);
  items[0].terms = {{1, 0.6}, {4, 0.8}};
  items[1].terms = items[0].terms;
  const Matrix sim = cosine_similarity(items);
  CHECK(sim(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("neighbor features") {
  Matrix sim(3, 3);
  sim << 1, 0.9, 0.2,  //
      0.9, 1, 0.8,     //
      0.2, 0.8, 1;
  const Matrix phi = neighbor_features(sim, 1);
  CHECK(phi(0, 1) == 1.0);
  CHECK(phi(2, 1) == 1.0);
  CHECK(phi.row(0).sum() == 1.0);
  CHECK(phi.row(2).sum() == 1.0);

  // m = N - 1: every row is all-but-self
  const Matrix all = neighbor_features(sim, 2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(all(i, j) == doctest::Approx(i == j ? 0.0 : 1.0 / std::sqrt(2.0)));

  // ties go to the lower index
  const Matrix flat = Matrix::Ones(4, 4);
  const Matrix tied = neighbor_features(flat, 1);
  CHECK(tied(0, 1) == 1.0);
  CHECK(tied(1, 0) == 1.0);
  CHECK(tied(3, 0) == 1.0);

  CHECK_THROWS_AS(neighbor_features(sim, 3), Error);
  CHECK_THROWS_AS(neighbor_features(sim, 0), Error);
}

TEST_CASE("proximity quality") {
  Matrix sim(3, 3);
  sim << 1, 0.5, 0.25,  //
      0.5, 1, 0,        //
      0.25, 0, 1;
  const Vector q = proximity_quality(sim, 2.0);
  CHECK(q[0] == doctest::Approx(std::exp(2.0 * 0.75)));
  CHECK(q[1] == doctest::Approx(std::exp(1.0)));
  CHECK(q[2] == doctest::Approx(std::exp(0.5)));
  CHECK(q[0] > q[1]);
  CHECK(proximity_quality(sim, 0.0) == Vector::Ones(3));
  CHECK(proximity_quality(Matrix::Identity(2, 2), 3.0) == Vector::Ones(2));
  CHECK_THROWS_AS(proximity_quality(sim, 1000.0), Error);
  CHECK_THROWS_AS(proximity_quality(sim, std::nan("")), Error);
}

TEST_CASE("json round trip") {
  Corpus corpus = generate_synthetic(small_config());
  attach_features(corpus, 5, 1.0);
  const Corpus back = corpus_from_json(corpus_to_json(corpus));
  REQUIRE(back.size() == corpus.size());
  CHECK(back.sim == corpus.sim);
  CHECK(back.topic_matrix() == corpus.topic_matrix());
  CHECK(back.items[3].terms == corpus.items[3].terms);
  CHECK_THROWS_AS(corpus_from_json("{not json"), Error);
}

}
