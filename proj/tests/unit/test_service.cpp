#include <doctest.h>

#include <httplib.h>

#include <filesystem>
#include <thread>

#include "../support/desk_stack.hpp"
#include "ics/errors.hpp"
#include "ics/matcher/checkpoint.hpp"
#include "ics/service/http.hpp"

using namespace ics;
using namespace ics::service;

namespace {

const testing::DeskStack& stack() {
  static const testing::DeskStack s = [] {
    testing::DeskOptions o;
    o.hybrid = true;
    return testing::build_desk_stack(o);
  }();
  return s;
}

struct FakeClock {
  std::shared_ptr<double> t = std::make_shared<double>(1000.0);
  RecommendationService::Clock fn() const {
    auto p = t;
    return [p] { return *p; };
  }
  void advance(double s) const { *t += s; }
};

ServiceConfig config_with(double threshold = 0.5, std::size_t k = 50, std::size_t max_shown = 3) {
  ServiceConfig c;
  c.threshold = threshold;
  c.k = k;
  c.max_shown = max_shown;
  return c;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("ics_service_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

// A turn that showed at least one scenario, searching the catalog texts.
std::pair<std::string, Recommendation> shown_turn(RecommendationService& svc) {
  for (const auto& c : stack().corpus.catalog) {
    const auto id = svc.open();
    auto rec = svc.recommend(id, c.description);
    if (!rec.fallback) return {id, rec};
  }
  FAIL("no catalog description produced a recommendation");
  return {};
}

}  // namespace

TEST_CASE("service: solution table validation and versioning") {
  std::vector<data::CatalogEntry> catalog{{"S1", "track the parcel", "Check the tracker", "logistics"},
                                          {"S2", "cancel the order", "Cancel in admin", "orders"}};
  SolutionTable table(catalog);
  CHECK(table.size() == 2);
  CHECK(table.at("S2").solution == "Cancel in admin");
  CHECK_THROWS_AS((void)table.at("S9"), NotFoundError);
  CHECK(table.to_json()["scenarios"].size() == 2);

  auto edited = catalog;
  edited[1].solution = "Cancel via the portal";
  CHECK(SolutionTable(edited).version() != table.version());
  CHECK(SolutionTable(catalog).version() == table.version());

  auto dup = catalog;
  dup.push_back(catalog[0]);
  CHECK_THROWS_AS(SolutionTable{dup}, ValidationError);
  auto blank = catalog;
  blank[0].description = "  ";
  CHECK_THROWS_AS(SolutionTable{blank}, ValidationError);
}

TEST_CASE("service: session lifecycle and average service time") {
  FakeClock clock;
  RecommendationService svc(stack().bundle(), config_with(), clock.fn());
  CHECK_FALSE(svc.metrics().ast_seconds.has_value());
  CHECK(svc.metrics().to_json()["ast_seconds"].is_null());

  const auto a = svc.open();
  clock.advance(120);
  svc.close(a, true);
  CHECK(*svc.metrics().ast_seconds == doctest::Approx(120.0));

  FakeClock c2;
  RecommendationService two(stack().bundle(), config_with(), c2.fn());
  const auto x = two.open();
  const auto y = two.open();
  c2.advance(60);
  two.close(x, false);
  c2.advance(120);
  two.close(y, true);
  const auto m = two.metrics();
  CHECK(*m.ast_seconds == doctest::Approx(120.0));
  CHECK(m.sessions_closed == 2);
  CHECK(m.sessions_resolved == 1);

  CHECK_THROWS_AS(two.close(x, true), ValidationError);
  CHECK_THROWS_AS((void)two.recommend(x, "hello"), ValidationError);
  CHECK_THROWS_AS((void)two.recommend("sess-nope", "hello"), NotFoundError);
  CHECK_THROWS_AS(two.close("sess-nope", true), NotFoundError);
  CHECK(x != y);
}

TEST_CASE("service: blank utterances fail validation before any model use") {
  RecommendationService unloaded(nullptr, config_with());
  const auto id = unloaded.open();
  CHECK_THROWS_AS((void)unloaded.recommend(id, ""), ValidationError);
  CHECK_THROWS_AS((void)unloaded.recommend(id, "  \t"), ValidationError);
  CHECK_THROWS_AS((void)unloaded.recommend(id, "where is my parcel"), UnavailableError);
  CHECK_FALSE(unloaded.healthy());
  CHECK_THROWS_AS((void)unloaded.catalog_json(), UnavailableError);

  unloaded.set_bundle(stack().bundle());
  CHECK(unloaded.healthy());
  CHECK_NOTHROW((void)unloaded.recommend(id, "where is my parcel"));
  CHECK_THROWS_AS((void)unloaded.recommend(id, "?!"), ValidationError);
}

TEST_CASE("service: threshold and cap semantics") {
  const auto bundle = stack().bundle();
  RecommendationService never(bundle, config_with(1.0));
  RecommendationService always(bundle, config_with(0.0, 50, 3));
  const auto a = never.open();
  const auto b = always.open();
  for (const auto& c : stack().corpus.catalog) {
    CHECK(never.recommend(a, c.description).fallback);
    const auto rec = always.recommend(b, c.description);
    CHECK_FALSE(rec.fallback);
    CHECK(rec.items.size() == 3);
    for (std::size_t i = 0; i < rec.items.size(); ++i) {
      CHECK(bundle->table().contains(rec.items[i].scenario_id));
      CHECK(rec.items[i].solution == bundle->table().at(rec.items[i].scenario_id).solution);
      if (i > 0) CHECK(rec.items[i - 1].score >= rec.items[i].score);
    }
  }

  RecommendationService half(bundle, config_with(0.5));
  const auto h = half.open();
  for (const auto& item : stack().corpus.replay) {
    const auto rec = half.recommend(h, item.utterance);
    CHECK(rec.items.size() <= 3);
    for (const auto& s : rec.items) CHECK(s.score >= 0.5);
    CHECK(rec.fallback == rec.items.empty());
    CHECK(rec.latency_ms >= 0.0);
  }
}

TEST_CASE("service: a catalog description recommends its own scenario first") {
  const auto bundle = stack().bundle();
  std::size_t first = 0;
  for (const auto& c : stack().corpus.catalog) {
    const auto rec = decide(*bundle, c.description, nullptr, bundle->table().size(), 0.0, 3);
    first += rec.items.front().scenario_id == c.scenario_id;
  }
  MESSAGE("self-match first for " << first << " of " << stack().corpus.catalog.size());
  CHECK(first == stack().corpus.catalog.size());
}

TEST_CASE("service: feedback validation and acceptance rate") {
  FakeClock clock;
  RecommendationService svc(stack().bundle(), config_with(0.0), clock.fn());
  auto [id, rec] = shown_turn(svc);
  const auto shown = rec.items.front().scenario_id;
  std::string unshown;
  for (const auto& c : stack().corpus.catalog) {
    bool seen = false;
    for (const auto& s : rec.items) seen |= s.scenario_id == c.scenario_id;
    if (!seen) unshown = c.scenario_id;
  }
  REQUIRE_FALSE(unshown.empty());

  CHECK_FALSE(svc.metrics().sar.has_value());
  CHECK_THROWS_AS(svc.feedback(id, rec.turn, FeedbackOutcome::kAccepted, unshown), ValidationError);
  CHECK_THROWS_AS(svc.feedback(id, rec.turn + 1, FeedbackOutcome::kRejected), ValidationError);
  CHECK_THROWS_AS(svc.feedback(id, rec.turn, FeedbackOutcome::kRejected, shown), ValidationError);
  CHECK_THROWS_AS(svc.feedback("sess-nope", 0, FeedbackOutcome::kManual), NotFoundError);
  svc.feedback(id, rec.turn, FeedbackOutcome::kAccepted, shown);
  CHECK_THROWS_AS(svc.feedback(id, rec.turn, FeedbackOutcome::kRejected), ValidationError);
  auto m = svc.metrics();
  CHECK(m.accepted == 1);
  CHECK(m.judged_turns == 1);
  CHECK(*m.sar == 1.0);

  const auto second = svc.recommend(id, stack().corpus.catalog.front().description);
  svc.feedback(id, second.turn, FeedbackOutcome::kRejected);
  m = svc.metrics();
  CHECK(m.accepted == 1);
  CHECK(m.judged_turns == 2);
  CHECK(*m.sar == 0.5);

  RecommendationService never(stack().bundle(), config_with(1.0));
  const auto n = never.open();
  const auto fb = never.recommend(n, "where is my parcel");
  REQUIRE(fb.fallback);
  CHECK_THROWS_AS(never.feedback(n, 0, FeedbackOutcome::kRejected), ValidationError);
  never.feedback(n, 0, FeedbackOutcome::kManual);
  CHECK(never.metrics().manual == 1);
  CHECK_FALSE(never.metrics().sar.has_value());

  CHECK_THROWS_AS((void)feedback_outcome_from_string("maybe"), ValidationError);

  const auto positives = svc.export_positives();
  REQUIRE(positives.size() == 1);
  CHECK(positives[0].scenario_id == shown);
  CHECK(positives[0].y == 1);
  CHECK(positives[0].s == stack().bundle()->table().at(shown).description);
}

TEST_CASE("service: the event log reconstructs the metrics") {
  const auto dir = temp_dir("events");
  auto config = config_with(0.3);
  config.event_log = dir / "events.jsonl";
  FakeClock clock;
  RecommendationService svc(stack().bundle(), config, clock.fn());
  nn::Rng rng(3);
  for (std::size_t i = 0; i < 40; ++i) {
    const auto& item = stack().corpus.replay[i];
    const auto id = svc.open(item.aspects);
    clock.advance(5 + rng.index(30));
    const auto rec = svc.recommend(id, item.utterance);
    clock.advance(1);
    if (rec.fallback) {
      svc.feedback(id, rec.turn, FeedbackOutcome::kManual);
    } else if (rng.bernoulli(0.6)) {
      svc.feedback(id, rec.turn, FeedbackOutcome::kAccepted, rec.items[rng.index(rec.items.size())].scenario_id);
    } else {
      svc.feedback(id, rec.turn, FeedbackOutcome::kRejected);
    }
    if (i % 4 != 0) svc.close(id, rng.bernoulli(0.5));
  }
  const auto live = svc.metrics();
  const auto replayed = compute_metrics(load_event_log(*config.event_log), stack().bundle()->table().size());
  CHECK(live == replayed);
  CHECK(live.to_json() == replayed.to_json());
  CHECK(live.turns == 40);
  CHECK(live.sessions_opened == 40);
  CHECK(live.sessions_closed == 30);
  REQUIRE(live.sar.has_value());
  CHECK(*live.sar >= 0.0);
  CHECK(*live.sar <= 1.0);
  CHECK(*live.scr <= 1.0);

  // A window keeps only the events inside it.
  const auto events = svc.event_log().events();
  const Window late{events[events.size() / 2].ts, std::nullopt};
  const auto partial = svc.metrics(late);
  CHECK(partial.turns < live.turns);
  CHECK(*partial.window_start >= *late.since);

  std::ofstream(dir / "bad.jsonl") << event_to_json(events[0]).dump() << "\n{\"type\": \"nope\"}\n";
  try {
    (void)load_event_log(dir / "bad.jsonl");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("service: aspects route to the hybrid model") {
  RecommendationService svc(stack().bundle(), config_with());
  const auto plain = svc.open();
  const auto with = svc.open(matcher::AttributeMap{{"order_status", std::string("shipped")}});
  CHECK(svc.recommend(plain, "where is my parcel").model == "student");
  CHECK(svc.recommend(with, "where is my parcel").model == "hybrid");
  CHECK_THROWS_AS((void)svc.open(matcher::AttributeMap{{"order_status", std::string("lost")}}), SchemaError);

  auto no_hybrid = std::make_shared<const ModelBundle>(stack().student, nullptr, stack().ranker,
                                                       SolutionTable(stack().corpus.catalog));
  RecommendationService student_only(no_hybrid, config_with());
  const auto s = student_only.open(matcher::AttributeMap{{"order_status", std::string("shipped")}});
  CHECK(student_only.recommend(s, "where is my parcel").model == "student");
}

TEST_CASE("service: replay recall containment and monotonicity in K") {
  const auto bundle = stack().bundle();
  const auto& replay = stack().corpus.replay;
  const auto n = bundle->table().size();
  double previous = -1.0;
  for (std::size_t k = 1; k <= n; ++k) {
    const auto capped = replay_evaluate(*bundle, replay, k, 0.5, 3);
    CHECK(capped.scr <= capped.coarse_recall);
    for (const auto& [id, row] : capped.per_scenario) CHECK(row.shown_hits <= row.coarse_hits);
    // Without the display cap a larger K can only add shown scenarios.
    const auto uncapped = replay_evaluate(*bundle, replay, k, 0.5, n);
    CHECK(uncapped.scr >= previous);
    previous = uncapped.scr;
  }
  const auto full = replay_evaluate(*bundle, replay, n, 0.5, 3);
  CHECK(full.coarse_recall == 1.0);
  CHECK(full.items == replay.size());
  CHECK(full.to_json()["per_scenario"].size() == full.per_scenario.size());

  CHECK_THROWS_AS((void)replay_evaluate(*bundle, {}, 5, 0.5, 3), DataError);
  CHECK_THROWS_AS((void)replay_evaluate(*bundle, {{"hello", "S999", std::nullopt}}, 5, 0.5, 3), NotFoundError);
}

TEST_CASE("service: bundle loads from files and matches the in-memory one") {
  const auto dir = temp_dir("bundle");
  const auto& s = stack();
  s.vocab->save(dir / "vocab.json");
  matcher::save(*s.student, dir / "student.ckpt");
  matcher::save(*s.hybrid, dir / "hybrid.ckpt");
  s.embeddings->save(dir / "embeddings.txt");
  s.tfidf->save(dir / "tfidf.json");
  data::save_catalog(dir / "catalog.jsonl", s.corpus.catalog);
  const nlohmann::json cfg{{"vocabulary", "vocab.json"},        {"student_checkpoint", "student.ckpt"},
                           {"hybrid_checkpoint", "hybrid.ckpt"}, {"embeddings", "embeddings.txt"},
                           {"tfidf", "tfidf.json"},              {"catalog", "catalog.jsonl"},
                           {"k", 5},                             {"port", 0}};
  std::ofstream(dir / "service.json") << cfg.dump(2);
  const auto config = load_service_config(dir / "service.json");
  CHECK(config.k == 5);
  CHECK(config.student_checkpoint == dir / "student.ckpt");
  const auto loaded = load_bundle(config);
  const auto memory = s.bundle();
  for (std::size_t i = 0; i < 20; ++i) {
    const auto& text = s.corpus.replay[i].utterance;
    const auto a = decide(*loaded, text, nullptr, 5, 0.0, 3);
    const auto b = decide(*memory, text, nullptr, 5, 0.0, 3);
    REQUIRE(a.items.size() == b.items.size());
    for (std::size_t j = 0; j < a.items.size(); ++j) {
      CHECK(a.items[j].scenario_id == b.items[j].scenario_id);
      CHECK(a.items[j].score == doctest::Approx(b.items[j].score).epsilon(1e-9));
    }
  }

  CHECK_THROWS_AS((void)service_config_from_json({{"k", 5}}), ConfigError);
  auto bad = cfg;
  bad["threshold"] = 1.5;
  CHECK_THROWS_AS((void)service_config_from_json(bad, dir), ConfigError);
  bad = cfg;
  bad["k"] = 0;
  CHECK_THROWS_AS((void)service_config_from_json(bad, dir), ConfigError);
}

TEST_CASE("service: concurrent sessions stay independent") {
  RecommendationService svc(stack().bundle(), config_with(0.0));
  constexpr std::size_t kThreads = 4, kTurns = 10;
  std::vector<std::thread> threads;
  std::vector<std::string> ids(kThreads);
  for (std::size_t t = 0; t < kThreads; ++t) {
    threads.emplace_back([&, t] {
      ids[t] = svc.open();
      for (std::size_t i = 0; i < kTurns; ++i) {
        const auto rec = svc.recommend(ids[t], stack().corpus.replay[t * kTurns + i].utterance);
        svc.feedback(ids[t], rec.turn, FeedbackOutcome::kAccepted, rec.items.front().scenario_id);
      }
      svc.close(ids[t], true);
    });
  }
  for (auto& th : threads) th.join();
  const auto m = svc.metrics();
  CHECK(m.turns == kThreads * kTurns);
  CHECK(m.accepted == kThreads * kTurns);
  CHECK(*m.sar == 1.0);
  CHECK(m.sessions_closed == kThreads);
}

TEST_CASE("service: live HTTP API") {
  RecommendationService svc(stack().bundle(), config_with(0.0));
  HttpServer server(svc);
  const int port = server.bind("127.0.0.1", 0);
  server.start();
  httplib::Client client("127.0.0.1", port);

  auto health = client.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(nlohmann::json::parse(health->body)["status"] == "ok");

  auto catalog = client.Get("/catalog");
  REQUIRE(catalog);
  CHECK(nlohmann::json::parse(catalog->body)["scenarios"].size() == stack().corpus.catalog.size());

  auto opened = client.Post("/sessions", "{}", "application/json");
  REQUIRE(opened);
  CHECK(opened->status == 201);
  const auto id = nlohmann::json::parse(opened->body)["session_id"].get<std::string>();

  const auto& description = stack().corpus.catalog.front().description;
  auto utter = client.Post("/sessions/" + id + "/utterances", nlohmann::json{{"text", description}}.dump(),
                           "application/json");
  REQUIRE(utter);
  CHECK(utter->status == 200);
  const auto rec = nlohmann::json::parse(utter->body);
  CHECK(rec["turn"] == 0);
  REQUIRE(rec["recommendations"].size() >= 1);
  const auto top = rec["recommendations"][0]["scenario_id"].get<std::string>();
  CHECK(rec["recommendations"][0]["score"].get<double>() ==
        svc.recommend(id, description).items.front().score);

  auto bad_feedback = client.Post("/sessions/" + id + "/feedback",
                                  nlohmann::json{{"turn", 0}, {"outcome", "accepted"}, {"scenario_id", "S999"}}.dump(),
                                  "application/json");
  REQUIRE(bad_feedback);
  CHECK(bad_feedback->status == 400);
  CHECK(nlohmann::json::parse(bad_feedback->body)["error"] == "validation");

  auto feedback = client.Post("/sessions/" + id + "/feedback",
                              nlohmann::json{{"turn", 0}, {"outcome", "accepted"}, {"scenario_id", top}}.dump(),
                              "application/json");
  REQUIRE(feedback);
  CHECK(feedback->status == 200);

  auto closed = client.Post("/sessions/" + id + "/close", R"({"resolved": true})", "application/json");
  REQUIRE(closed);
  CHECK(closed->status == 200);
  auto again = client.Post("/sessions/" + id + "/close", R"({"resolved": true})", "application/json");
  REQUIRE(again);
  CHECK(again->status == 400);

  auto metrics = client.Get("/metrics");
  REQUIRE(metrics);
  const auto m = nlohmann::json::parse(metrics->body);
  CHECK(m["sar"] == 1.0);
  CHECK(m["counts"]["accepted"] == 1);
  CHECK(m["csr"].is_null());
  CHECK(m["bcr"].is_null());
  auto windowed = client.Get("/metrics?since=abc");
  REQUIRE(windowed);
  CHECK(windowed->status == 400);

  auto missing = client.Post("/sessions/sess-nope/utterances", R"({"text": "hi"})", "application/json");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  auto empty = client.Post("/sessions/" + id + "/utterances", R"({"text": ""})", "application/json");
  REQUIRE(empty);
  CHECK(empty->status == 400);
  auto garbage = client.Post("/sessions", "{not json", "application/json");
  REQUIRE(garbage);
  CHECK(garbage->status == 400);
  auto schema = client.Post("/sessions", R"({"aspects": {"order_status": "lost"}})", "application/json");
  REQUIRE(schema);
  CHECK(schema->status == 400);
  CHECK(nlohmann::json::parse(schema->body)["field"] == "order_status");
  server.stop();

  RecommendationService unloaded(nullptr, config_with());
  HttpServer down(unloaded);
  const int down_port = down.bind("127.0.0.1", 0);
  down.start();
  httplib::Client dc("127.0.0.1", down_port);
  auto h = dc.Get("/healthz");
  REQUIRE(h);
  CHECK(h->status == 503);
  const auto sid = nlohmann::json::parse(dc.Post("/sessions", "", "application/json")->body)["session_id"];
  auto u = dc.Post("/sessions/" + sid.get<std::string>() + "/utterances", R"({"text": "hi there"})",
                   "application/json");
  REQUIRE(u);
  CHECK(u->status == 503);
}
