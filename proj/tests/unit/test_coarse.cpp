#include <doctest.h>

#include <cmath>

#include "../support/coarse_oracle.hpp"
#include "ics/coarse/ranker.hpp"
#include "ics/errors.hpp"

using namespace ics::coarse;
using namespace ics::text;

namespace {
struct Fixture {
  std::shared_ptr<EmbeddingTable> table;
  std::shared_ptr<TfIdfModel> tfidf;
  Fixture() {
    Vocabulary vocab;
    vocab.add("return", 1);
    vocab.add("shoes", 1);
    vocab.add("refund", 1);
    vocab.add("track", 1);
    // rows: pad, unk, return, shoes, refund, track
    table = std::make_shared<EmbeddingTable>(vocab, 2, std::vector<double>{0, 0, 0, 0, 1, 0, 0, 1, 1, 1, -1, 0});
    tfidf = std::make_shared<TfIdfModel>(fit_tfidf({{"return", "shoes"}, {"refund"}, {"track"}, {"return"}}));
  }
};
}  // namespace

TEST_CASE("weighted average") {
  std::vector<double> e1{1, 0}, e2{0, 1};
  std::vector<std::span<const double>> vs{e1, e2};
  // weights 1 and 3: (1*[1,0] + 3*[0,1]) / 4
  std::vector<double> w{1.0, 3.0};
  CHECK(weighted_average(w, vs, 2) == std::vector<double>{0.25, 0.75});
  std::vector<double> equal{2.0, 2.0};
  CHECK(weighted_average(equal, vs, 2) == std::vector<double>{0.5, 0.5});
}

TEST_CASE("represent") {
  Fixture f;
  CoarseRanker ranker(f.table, f.tfidf);
  auto single = ranker.represent("shoes");
  CHECK(single.values == std::vector<double>{0, 1});
  CHECK_FALSE(single.no_known_tokens);

  // Equal idf (both appear in one document) -> plain mean.
  auto pair = ranker.represent("shoes refund");
  CHECK(pair.values[0] == doctest::Approx(0.5));
  CHECK(pair.values[1] == doctest::Approx(1.0));

  auto unknown = ranker.represent("completely unseen words");
  CHECK(unknown.no_known_tokens);
  CHECK(unknown.values == std::vector<double>{0, 0});

  // Unknown tokens never perturb the representation.
  CHECK(ranker.represent("shoes blah").values == single.values);
}

TEST_CASE("cosine") {
  SentenceVector a{{1, 0}, "a"}, b{{0, 1}, "b"}, c{{1, 1}, "c"}, zero{{0, 0}, "z"};
  CHECK(cosine(c, c) == doctest::Approx(1.0));
  CHECK(cosine(a, b) == 0.0);
  CHECK(cosine(c, a) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(cosine(c, a) == cosine(a, c));
  CHECK(cosine(zero, a) == 0.0);
  SentenceVector three{{1, 2, 3}, "t"};
  CHECK_THROWS_AS(cosine(a, three), ics::DimensionError);
}

TEST_CASE("top_k") {
  Fixture f;
  CoarseRanker ranker(f.table, f.tfidf);
  auto index = ScenarioIndex::build(ranker, {{"s1", "track my parcel"}, {"s2", "return shoes"}, {"s3", "refund"}});
  auto best = top_k("return shoes", ranker, index, 1);
  REQUIRE(best.size() == 1);
  CHECK(best[0].scenario_id == "s2");

  auto all = top_k("return shoes", ranker, index, 10);
  CHECK(all.size() == 3);
  for (std::size_t i = 1; i < all.size(); ++i) CHECK(all[i - 1].similarity >= all[i].similarity);

  CHECK_THROWS_AS(top_k("x", ranker, ScenarioIndex{}, 3), ics::ConfigError);
  CHECK_THROWS_AS(top_k("x", ranker, index, 0), ics::ConfigError);
  CHECK_THROWS_AS(ScenarioIndex::build(ranker, {{"s1", "a"}, {"s1", "b"}}), ics::DataError);
}

TEST_CASE("ties break by ascending scenario id") {
  Fixture f;
  CoarseRanker ranker(f.table, f.tfidf);
  auto index = ScenarioIndex::build(ranker, {{"s9", "refund"}, {"s1", "refund"}, {"s5", "refund"}});
  auto ranked = top_k("refund", ranker, index, 3);
  CHECK(ranked[0].scenario_id == "s1");
  CHECK(ranked[1].scenario_id == "s5");
  CHECK(ranked[2].scenario_id == "s9");
}

TEST_CASE("index version tracks catalog changes") {
  Fixture f;
  CoarseRanker ranker(f.table, f.tfidf);
  auto a = ScenarioIndex::build(ranker, {{"s1", "refund"}});
  auto b = ScenarioIndex::build(ranker, {{"s1", "refund shoes"}});
  CHECK(a.version() != b.version());
  CHECK(a.version() == ScenarioIndex::build(ranker, {{"s1", "refund"}}).version());
}

TEST_CASE("scaling tf-idf weights leaves representations unchanged") {
  std::vector<double> e1{1, 2}, e2{-3, 0.5};
  std::vector<std::span<const double>> vs{e1, e2};
  std::vector<double> w{0.7, 1.9}, scaled{0.7 * 13.0, 1.9 * 13.0};
  auto a = weighted_average(w, vs, 2), b = weighted_average(scaled, vs, 2);
  CHECK(a[0] == doctest::Approx(b[0]).epsilon(1e-14));
  CHECK(a[1] == doctest::Approx(b[1]).epsilon(1e-14));
}

TEST_CASE("top_k equals exhaustive ranking on random catalogs") {
  auto r = ics::testing::run_coarse_oracle(200, 31);
  CHECK(r.catalogs == 200);
  CHECK(r.mismatches == 0);
}
