#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "ics/data_prep/pipeline.hpp"
#include "ics/data_prep/synthetic.hpp"
#include "ics/errors.hpp"

using namespace ics;
using namespace ics::data;

namespace {

std::vector<CatalogEntry> catalog_of(std::size_t n) {
  std::vector<CatalogEntry> c;
  for (std::size_t i = 1; i <= n; ++i) {
    c.push_back({"s" + std::to_string(i), "description " + std::to_string(i), "solution", "general"});
  }
  return c;
}

SessionLogRecord session(std::string id, std::vector<Utterance> u, std::vector<Operation> ops) {
  return {std::move(id), std::move(u), std::move(ops), {}};
}

std::vector<TrainingTriplet> organic_for(const std::string& scenario, std::size_t n) {
  std::vector<TrainingTriplet> out;
  for (std::size_t i = 0; i < n; ++i) {
    TrainingTriplet t;
    t.u = "utterance " + std::to_string(i);
    t.s = "desc " + scenario;
    t.y = 1;
    t.session_id = scenario + "-" + std::to_string(i);
    t.scenario_id = scenario;
    out.push_back(t);
  }
  return out;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("ics_test_" + name);
}

}  // namespace

TEST_CASE("utterance followed by a click yields one positive") {
  auto catalog = catalog_of(3);
  std::vector<SessionLogRecord> logs{
      session("a", {{1.0, "u1"}}, {{2.0, OperationKind::kClick, "s3"}})};
  auto r = extract_positives(logs, catalog);
  REQUIRE(r.positives.size() == 1);
  CHECK(r.positives[0].u == "u1");
  CHECK(r.positives[0].s == "description 3");
  CHECK(r.positives[0].y == 1);
  CHECK(r.positives[0].provenance == Provenance::kOrganic);
}

TEST_CASE("extraction edge rules") {
  auto catalog = catalog_of(3);
  SUBCASE("click before any utterance is skipped") {
    std::vector<SessionLogRecord> logs{session("a", {{5.0, "late"}}, {{1.0, OperationKind::kClick, "s1"}})};
    auto r = extract_positives(logs, catalog);
    CHECK(r.positives.empty());
    CHECK(r.skipped_no_utterance == 1);
  }
  SUBCASE("two clicks on the same scenario give one triplet") {
    std::vector<SessionLogRecord> logs{
        session("a", {{1.0, "u1"}}, {{2.0, OperationKind::kClick, "s2"}, {3.0, OperationKind::kClick, "s2"}})};
    auto r = extract_positives(logs, catalog);
    CHECK(r.positives.size() == 1);
    CHECK(r.duplicates_merged == 1);
  }
  SUBCASE("hover is ignored, search counts, nearest preceding utterance wins") {
    std::vector<SessionLogRecord> logs{session("a", {{1.0, "u1"}, {4.0, "u2"}, {9.0, "u3"}},
                                               {{2.0, OperationKind::kHover, "s1"},
                                                {4.0, OperationKind::kSearch, "s2"},
                                                {6.0, OperationKind::kClick, "s3"},
                                                {7.0, OperationKind::kClick, "zz"}})};
    auto r = extract_positives(logs, catalog);
    REQUIRE(r.positives.size() == 2);
    CHECK(r.hovers_ignored == 1);
    CHECK(r.skipped_unknown_scenario == 1);
    CHECK(r.positives[0].u == "u2");
    CHECK(r.positives[0].scenario_id == "s2");
    CHECK(r.positives[1].u == "u2");
    CHECK(r.positives[1].utterance_index == 1);
  }
}

TEST_CASE("rare scenarios are replicated to exactly factor times") {
  auto positives = organic_for("rare", 7);
  auto common = organic_for("common", 60);
  positives.insert(positives.end(), common.begin(), common.end());
  auto out = upsample_rare(positives, 50, 100);
  std::size_t rare = 0, common_count = 0;
  for (const auto& t : out) {
    if (t.scenario_id == "rare") ++rare;
    else ++common_count;
  }
  CHECK(rare == 700);
  CHECK(common_count == 60);
  for (const auto& t : out) {
    if (t.provenance != Provenance::kUpsampled) continue;
    bool matched = false;
    for (const auto& o : positives) matched = matched || o.same_pair(t);
    CHECK(matched);
  }
  CHECK(upsample_rare(positives, 50, 1).size() == positives.size());
  CHECK_THROWS_AS(upsample_rare(positives, 50, 0), ConfigError);
}

TEST_CASE("negative sampling contract") {
  SyntheticConfig sc;
  sc.scenarios = 12;
  sc.sessions = 200;
  sc.replay_items = 0;
  auto corpus = generate_synthetic(sc);
  auto organic = extract_positives(corpus.logs, corpus.catalog).positives;
  auto positives = upsample_rare(organic, 10, 100);
  auto a = sample_negatives(positives, organic, corpus.logs, corpus.catalog, 5);
  auto b = sample_negatives(positives, organic, corpus.logs, corpus.catalog, 5);
  CHECK(a.size() == positives.size());
  std::set<std::pair<std::string, std::string>> linked;
  for (const auto& t : organic) linked.emplace(t.u, t.scenario_id);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].y == 0);
    CHECK(a[i].provenance == Provenance::kNegative);
    CHECK_FALSE(linked.count({a[i].u, a[i].scenario_id}));
    CHECK(a[i].u == b[i].u);
    CHECK(a[i].scenario_id == b[i].scenario_id);
  }
  CHECK_THROWS_AS(sample_negatives(positives, organic, corpus.logs, catalog_of(1), 5), DataError);

  // One utterance linked to both scenarios of a 2-scenario catalog.
  auto catalog = catalog_of(2);
  std::vector<SessionLogRecord> logs{
      session("a", {{1.0, "u"}}, {{2.0, OperationKind::kClick, "s1"}, {2.0, OperationKind::kClick, "s2"}})};
  auto full = extract_positives(logs, catalog).positives;
  CHECK_THROWS_AS(sample_negatives(full, full, logs, catalog, 1), DataError);
}

TEST_CASE("session split") {
  std::vector<TrainingTriplet> dataset;
  for (int s = 0; s < 100; ++s) {
    for (int k = 0; k < 3; ++k) {
      TrainingTriplet t;
      t.session_id = "sess" + std::to_string(s);
      t.scenario_id = "sc" + std::to_string(s % 7);
      t.y = k == 2 ? 0 : 1;
      dataset.push_back(t);
    }
  }
  auto a = split(dataset, {0.8, 0.1, 0.1}, 3);
  CHECK(a.sessions == std::array<std::size_t, 3>{80, 10, 10});
  CHECK(a.train.size() == 240);
  std::map<std::string, int> where;
  auto mark = [&](const std::vector<TrainingTriplet>& part, int k) {
    for (const auto& t : part) {
      auto [it, inserted] = where.emplace(t.session_id, k);
      CHECK(it->second == k);
    }
  };
  mark(a.train, 0);
  mark(a.validation, 1);
  mark(a.test, 2);
  auto b = split(dataset, {0.8, 0.1, 0.1}, 3);
  for (std::size_t i = 0; i < a.test.size(); ++i) CHECK(a.test[i].session_id == b.test[i].session_id);
  CHECK_THROWS_AS(split(dataset, {0.8, 0.1, 0.2}, 3), ConfigError);
}

TEST_CASE("prepared dataset invariants") {
  SyntheticConfig sc;
  sc.scenarios = 20;
  sc.sessions = 400;
  sc.rare_scenarios = 2;
  sc.rare_sessions = 2;
  sc.replay_items = 10;
  auto corpus = generate_synthetic(sc);
  PrepConfig pc;
  pc.rarity_threshold = 5;
  auto p = prepare_dataset(corpus.logs, corpus.catalog, pc);
  CHECK(p.negatives == p.augmented_positives);
  std::size_t pos = 0, neg = 0;
  for (const auto* part : {&p.split.train, &p.split.validation, &p.split.test}) {
    for (const auto& t : *part) (t.y ? pos : neg)++;
  }
  CHECK(pos == neg);
  for (const auto& [scenario, organic] : p.organic_per_scenario) {
    if (organic < pc.rarity_threshold) CHECK(p.augmented_per_scenario.at(scenario) == 100 * organic);
    else CHECK(p.augmented_per_scenario.at(scenario) == organic);
  }
  CHECK(p.extraction.hovers_ignored > 0);

  auto again = prepare_dataset(corpus.logs, corpus.catalog, pc);
  REQUIRE(again.split.train.size() == p.split.train.size());
  for (std::size_t i = 0; i < p.split.train.size(); ++i) {
    CHECK(again.split.train[i].same_pair(p.split.train[i]));
  }
  CHECK(p.summary()["negatives"] == p.negatives);
}

TEST_CASE("synthetic corpus is deterministic and honours rare scenarios") {
  SyntheticConfig sc;
  sc.scenarios = 10;
  sc.sessions = 100;
  sc.rare_scenarios = 2;
  sc.rare_sessions = 3;
  sc.replay_items = 20;
  auto a = generate_synthetic(sc), b = generate_synthetic(sc);
  CHECK(a.catalog.size() == 10);
  CHECK(a.logs.size() == 100);
  CHECK(a.replay.size() == 20);
  for (std::size_t i = 0; i < a.logs.size(); ++i) CHECK(session_to_json(a.logs[i]) == session_to_json(b.logs[i]));
  auto organic = extract_positives(a.logs, a.catalog).positives;
  std::map<std::string, std::size_t> counts;
  for (const auto& t : organic) ++counts[t.scenario_id];
  CHECK(counts["S001"] == 3);
  CHECK(counts["S002"] == 3);
  sc.scenarios = 500;
  CHECK_THROWS_AS(generate_synthetic(sc), ConfigError);
}

TEST_CASE("lint report flags empty texts and unknown scenarios") {
  auto catalog = catalog_of(2);
  std::vector<SessionLogRecord> logs{session("a", {{1.0, "  !! "}, {2.0, "fine"}}, {{3.0, OperationKind::kClick, "s9"}})};
  auto r = lint(logs, catalog);
  CHECK(r.empty_utterances == 1);
  CHECK(r.unknown_scenario_operations == 1);
  CHECK(r.examples.size() == 2);
}

TEST_CASE("file formats round-trip and report line numbers") {
  auto corpus = generate_synthetic({.scenarios = 5, .sessions = 20, .rare_scenarios = 0, .replay_items = 5});
  const auto logs = temp_path("logs.jsonl"), cat = temp_path("catalog.jsonl"), rep = temp_path("replay.jsonl");
  save_session_logs(logs, corpus.logs);
  save_catalog(cat, corpus.catalog);
  save_replay(rep, corpus.replay);
  CHECK(load_session_logs(logs).size() == 20);
  CHECK(load_catalog(cat).size() == 5);
  CHECK(load_replay(rep).size() == 5);

  auto triplets = extract_positives(corpus.logs, corpus.catalog).positives;
  const auto tp = temp_path("triplets.jsonl");
  save_triplets(tp, triplets);
  auto back = load_triplets(tp);
  REQUIRE(back.size() == triplets.size());
  for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i].same_pair(triplets[i]));

  {
    std::ofstream out(logs);
    out << session_to_json(corpus.logs[0]).dump() << "\n{not json\n";
  }
  try {
    load_session_logs(logs);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  {
    std::ofstream out(logs);
    out << R"({"id":"x","utterances":[{"ts":5,"text":"a"},{"ts":1,"text":"b"}],"operations":[]})" << "\n";
  }
  CHECK_THROWS_AS(load_session_logs(logs), ParseError);
  {
    std::ofstream out(cat);
    out << R"({"scenario_id":"a","description":"x"})" << "\n" << R"({"scenario_id":"a","description":"y"})" << "\n";
  }
  CHECK_THROWS_AS(load_catalog(cat), ParseError);
}
