#include "ics/service/service.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>

#include "ics/errors.hpp"
#include "ics/matcher/checkpoint.hpp"
#include "ics/text/tokenizer.hpp"
#include "ics/trainer/metrics.hpp"

namespace ics::service {
namespace {

void fnv(std::uint64_t& h, const std::string& s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  h ^= 0xff;
  h *= 1099511628211ull;
}

std::vector<std::vector<std::string>> scenario_tokens(const SolutionTable& table) {
  std::vector<std::vector<std::string>> out;
  for (const auto& e : table.entries()) {
    auto tokens = text::tokenize(e.description);
    if (tokens.empty()) throw ValidationError("scenario " + e.scenario_id + " has a description with no tokens");
    out.push_back(std::move(tokens));
  }
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

bool blank(const std::string& s) { return s.find_first_not_of(" \t\r\n") == std::string::npos; }

}  // namespace

SolutionTable::SolutionTable(const std::vector<data::CatalogEntry>& catalog) {
  version_ = 14695981039346656037ull;
  for (const auto& c : catalog) {
    if (c.scenario_id.empty()) throw ValidationError("catalog entry with an empty scenario id");
    if (blank(c.description)) throw ValidationError("scenario " + c.scenario_id + " has an empty description");
    if (!positions_.emplace(c.scenario_id, entries_.size()).second) {
      throw ValidationError("duplicate scenario id " + c.scenario_id);
    }
    entries_.push_back({c.scenario_id, c.description, c.solution, c.domain});
    fnv(version_, c.scenario_id);
    fnv(version_, c.description);
    fnv(version_, c.solution);
    fnv(version_, c.domain);
  }
}

const SolutionEntry& SolutionTable::at(const std::string& id) const { return entries_[position(id)]; }

std::size_t SolutionTable::position(const std::string& id) const {
  const auto it = positions_.find(id);
  if (it == positions_.end()) throw NotFoundError("unknown scenario id " + id);
  return it->second;
}

nlohmann::json SolutionTable::to_json() const {
  auto scenarios = nlohmann::json::array();
  for (const auto& e : entries_) {
    scenarios.push_back(
        {{"scenario_id", e.scenario_id}, {"description", e.description}, {"solution", e.solution}, {"domain", e.domain}});
  }
  char version[17];
  std::snprintf(version, sizeof version, "%016llx", static_cast<unsigned long long>(version_));
  return {{"version", version}, {"size", entries_.size()}, {"scenarios", scenarios}};
}

ModelBundle::ModelBundle(std::shared_ptr<const matcher::StudentModel> student,
                         std::shared_ptr<const matcher::HybridModel> hybrid,
                         std::shared_ptr<const coarse::CoarseRanker> ranker, SolutionTable table)
    : student_(std::move(student)), hybrid_(std::move(hybrid)), ranker_(std::move(ranker)), table_(std::move(table)) {
  if (!student_ || !ranker_) throw ConfigError("a model bundle needs a student model and a coarse ranker");
  if (table_.size() == 0) throw ConfigError("a model bundle needs a non-empty catalog");
  std::vector<std::pair<std::string, std::string>> docs;
  for (const auto& e : table_.entries()) docs.emplace_back(e.scenario_id, e.description);
  index_ = coarse::ScenarioIndex::build(*ranker_, docs);
  const auto tokens = scenario_tokens(table_);
  student_scorer_ = std::make_unique<matcher::CatalogScorer>(*student_, tokens);
  if (hybrid_) hybrid_scorer_ = std::make_unique<matcher::CatalogScorer>(hybrid_->student(), tokens);
}

void ServiceConfig::validate() const {
  if (k == 0) throw ConfigError("service K must be at least 1");
  if (max_shown == 0) throw ConfigError("max_shown must be at least 1");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("threshold must lie in [0, 1]");
  if (port < 0 || port > 65535) throw ConfigError("port out of range");
  if (use_history && history_turns == 0) throw ConfigError("history_turns must be at least 1");
}

ServiceConfig service_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  try {
    ServiceConfig c;
    c.vocabulary = resolve(base_dir, j.at("vocabulary").get<std::string>());
    c.student_checkpoint = resolve(base_dir, j.at("student_checkpoint").get<std::string>());
    if (j.contains("hybrid_checkpoint") && !j.at("hybrid_checkpoint").is_null()) {
      c.hybrid_checkpoint = resolve(base_dir, j.at("hybrid_checkpoint").get<std::string>());
    }
    c.embeddings = resolve(base_dir, j.at("embeddings").get<std::string>());
    c.tfidf = resolve(base_dir, j.at("tfidf").get<std::string>());
    c.catalog = resolve(base_dir, j.at("catalog").get<std::string>());
    if (j.contains("event_log") && !j.at("event_log").is_null()) {
      c.event_log = resolve(base_dir, j.at("event_log").get<std::string>());
    }
    c.k = j.value("k", c.k);
    c.threshold = j.value("threshold", c.threshold);
    c.max_shown = j.value("max_shown", c.max_shown);
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    c.use_history = j.value("use_history", c.use_history);
    c.history_turns = j.value("history_turns", c.history_turns);
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("service config: ") + e.what());
  }
}

nlohmann::json service_config_to_json(const ServiceConfig& c) {
  nlohmann::json j{{"vocabulary", c.vocabulary.string()},
                   {"student_checkpoint", c.student_checkpoint.string()},
                   {"hybrid_checkpoint", c.hybrid_checkpoint ? nlohmann::json(c.hybrid_checkpoint->string()) : nlohmann::json()},
                   {"embeddings", c.embeddings.string()},
                   {"tfidf", c.tfidf.string()},
                   {"catalog", c.catalog.string()},
                   {"event_log", c.event_log ? nlohmann::json(c.event_log->string()) : nlohmann::json()},
                   {"k", c.k},
                   {"threshold", c.threshold},
                   {"max_shown", c.max_shown},
                   {"host", c.host},
                   {"port", c.port},
                   {"use_history", c.use_history},
                   {"history_turns", c.history_turns}};
  return j;
}

ServiceConfig load_service_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open service config '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("service config '" + path.string() + "': " + e.what());
  }
  return service_config_from_json(j, path.parent_path());
}

std::shared_ptr<const ModelBundle> load_bundle(const ServiceConfig& config) {
  auto vocab = std::make_shared<const text::Vocabulary>(text::Vocabulary::load(config.vocabulary));
  auto student = std::make_shared<const matcher::StudentModel>(matcher::load_student(config.student_checkpoint, vocab));
  std::shared_ptr<const matcher::HybridModel> hybrid;
  if (config.hybrid_checkpoint) {
    hybrid = std::make_shared<const matcher::HybridModel>(matcher::load_hybrid(*config.hybrid_checkpoint, vocab));
  }
  auto embeddings = std::make_shared<const text::EmbeddingTable>(text::load_embeddings(config.embeddings));
  auto tfidf = std::make_shared<const text::TfIdfModel>(text::TfIdfModel::load(config.tfidf));
  auto ranker = std::make_shared<const coarse::CoarseRanker>(embeddings, tfidf);
  return std::make_shared<const ModelBundle>(student, hybrid, ranker, SolutionTable(data::load_catalog(config.catalog)));
}

nlohmann::json Recommendation::to_json() const {
  auto list = nlohmann::json::array();
  for (const auto& item : items) {
    list.push_back({{"scenario_id", item.scenario_id},
                    {"score", item.score},
                    {"description", item.description},
                    {"solution", item.solution},
                    {"domain", item.domain}});
  }
  return {{"session_id", session_id}, {"turn", turn},   {"recommendations", list},
          {"fallback", fallback},     {"latency_ms", latency_ms}, {"model", model},
          {"coarse_candidates", coarse.size()}};
}

Recommendation decide(const ModelBundle& bundle, const std::string& text, const matcher::AspectFeatureVector* aspects,
                      std::size_t k, double threshold, std::size_t max_shown) {
  const auto start = std::chrono::steady_clock::now();
  const auto tokens = text::tokenize(text);
  if (tokens.empty()) throw ValidationError("utterance has no tokens");

  Recommendation rec;
  rec.coarse = coarse::top_k(text, bundle.ranker(), bundle.index(), k);
  std::vector<std::size_t> positions;
  positions.reserve(rec.coarse.size());
  for (const auto& c : rec.coarse) positions.push_back(bundle.table().position(c.scenario_id));

  std::vector<double> scores;
  if (aspects && bundle.hybrid()) {
    rec.model = "hybrid";
    scores = bundle.hybrid_scorer()->score_hybrid(*bundle.hybrid(), tokens, positions, *aspects);
  } else {
    rec.model = "student";
    scores = bundle.student_scorer().score(tokens, positions);
  }

  // Probabilities live in (0, 1); a threshold of 1 admits nothing even when
  // the sigmoid rounds to 1.
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (scores[i] >= threshold && threshold < 1.0) {
      const auto& entry = bundle.table().entries()[positions[i]];
      rec.items.push_back({entry.scenario_id, scores[i], entry.description, entry.solution, entry.domain});
    }
  }
  std::sort(rec.items.begin(), rec.items.end(), [](const ShownScenario& a, const ShownScenario& b) {
    return a.score != b.score ? a.score > b.score : a.scenario_id < b.scenario_id;
  });
  if (rec.items.size() > max_shown) rec.items.resize(max_shown);
  rec.fallback = rec.items.empty();
  rec.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

RecommendationService::RecommendationService(std::shared_ptr<const ModelBundle> bundle, ServiceConfig config,
                                             Clock clock)
    : config_(std::move(config)), clock_(std::move(clock)), bundle_(std::move(bundle)) {
  config_.validate();
  log_ = config_.event_log ? std::make_unique<EventLog>(*config_.event_log) : std::make_unique<EventLog>();
}

void RecommendationService::set_bundle(std::shared_ptr<const ModelBundle> bundle) {
  std::lock_guard lock(bundle_mutex_);
  bundle_ = std::move(bundle);
}

std::shared_ptr<const ModelBundle> RecommendationService::bundle() const {
  std::lock_guard lock(bundle_mutex_);
  return bundle_;
}

double RecommendationService::now() const {
  if (clock_) return clock_();
  return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
}

std::shared_ptr<RecommendationService::Session> RecommendationService::find(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("unknown session " + id);
  return it->second;
}

std::string RecommendationService::open(const std::optional<matcher::AttributeMap>& aspects) {
  if (aspects) {
    if (const auto b = bundle(); b && b->hybrid()) (void)b->hybrid()->schema().encode(*aspects);
  }
  auto session = std::make_shared<Session>();
  char id[32];
  std::snprintf(id, sizeof id, "sess-%06zu", next_id_.fetch_add(1));
  session->id = id;
  session->opened = session->last_activity = now();
  if (aspects && !aspects->empty()) session->attributes = aspects;
  {
    std::unique_lock lock(sessions_mutex_);
    sessions_.emplace(session->id, session);
  }
  Event e;
  e.type = Event::Type::kOpen;
  e.session_id = session->id;
  e.ts = session->opened;
  e.aspects = session->attributes;
  log_->append(e);
  return session->id;
}

Recommendation RecommendationService::recommend(const std::string& session_id, const std::string& text) {
  if (blank(text)) throw ValidationError("utterance text is empty");
  auto session = find(session_id);
  std::lock_guard lock(session->mutex);
  if (session->closed) throw ValidationError("session " + session_id + " is closed");
  const auto b = bundle();
  if (!b) throw UnavailableError("models are not loaded");

  std::string query = text;
  if (config_.use_history) {
    const auto keep = std::min(session->turns.size(), config_.history_turns - 1);
    query.clear();
    for (auto i = session->turns.size() - keep; i < session->turns.size(); ++i) query += session->turns[i].text + " ";
    query += text;
  }
  std::optional<matcher::AspectFeatureVector> aspects;
  if (session->attributes && b->hybrid()) aspects = b->hybrid()->schema().encode(*session->attributes);

  auto rec = decide(*b, query, aspects ? &*aspects : nullptr, config_.k, config_.threshold, config_.max_shown);
  rec.session_id = session_id;
  rec.turn = session->turns.size();

  Turn turn;
  turn.text = text;
  turn.fallback = rec.fallback;
  for (const auto& item : rec.items) turn.shown.push_back(item.scenario_id);
  session->last_activity = now();

  Event e;
  e.type = Event::Type::kRecommend;
  e.session_id = session_id;
  e.ts = session->last_activity;
  e.turn = rec.turn;
  e.text = text;
  e.shown = turn.shown;
  e.fallback = rec.fallback;
  e.latency_ms = rec.latency_ms;
  e.model = rec.model;
  session->turns.push_back(std::move(turn));
  log_->append(e);
  return rec;
}

void RecommendationService::feedback(const std::string& session_id, std::size_t turn, FeedbackOutcome outcome,
                                     const std::string& scenario_id) {
  auto session = find(session_id);
  std::lock_guard lock(session->mutex);
  if (turn >= session->turns.size()) {
    throw ValidationError("session " + session_id + " has no turn " + std::to_string(turn));
  }
  auto& t = session->turns[turn];
  if (t.has_feedback) throw ValidationError("turn " + std::to_string(turn) + " already has feedback");
  if (outcome == FeedbackOutcome::kAccepted) {
    if (std::find(t.shown.begin(), t.shown.end(), scenario_id) == t.shown.end()) {
      throw ValidationError("scenario '" + scenario_id + "' was not shown in turn " + std::to_string(turn));
    }
  } else if (!scenario_id.empty()) {
    throw ValidationError("scenario_id is only valid with an accepted outcome");
  }
  if (outcome == FeedbackOutcome::kRejected && t.fallback) {
    throw ValidationError("turn " + std::to_string(turn) + " showed no recommendations to reject");
  }
  t.has_feedback = true;
  session->last_activity = now();

  Event e;
  e.type = Event::Type::kFeedback;
  e.session_id = session_id;
  e.ts = session->last_activity;
  e.turn = turn;
  e.outcome = outcome;
  e.scenario_id = scenario_id;
  log_->append(e);
}

void RecommendationService::close(const std::string& session_id, bool resolved) {
  auto session = find(session_id);
  std::lock_guard lock(session->mutex);
  if (session->closed) throw ValidationError("session " + session_id + " is already closed");
  session->closed = true;
  session->resolved = resolved;
  session->last_activity = now();
  Event e;
  e.type = Event::Type::kClose;
  e.session_id = session_id;
  e.ts = session->last_activity;
  e.resolved = resolved;
  log_->append(e);
}

MetricsSnapshot RecommendationService::metrics(const Window& window) const {
  const auto b = bundle();
  return compute_metrics(log_->events(), b ? b->table().size() : 0, window);
}

std::vector<data::TrainingTriplet> RecommendationService::export_positives() const {
  const auto b = bundle();
  const auto events = log_->events();
  std::map<std::pair<std::string, std::size_t>, std::string> texts;
  std::vector<data::TrainingTriplet> out;
  for (const auto& e : events) {
    if (e.type == Event::Type::kRecommend) texts[{e.session_id, e.turn}] = e.text;
    if (e.type != Event::Type::kFeedback || e.outcome != FeedbackOutcome::kAccepted) continue;
    if (!b || !b->table().contains(e.scenario_id)) continue;
    data::TrainingTriplet t;
    t.u = texts[{e.session_id, e.turn}];
    t.s = b->table().at(e.scenario_id).description;
    t.y = 1;
    t.session_id = e.session_id;
    t.scenario_id = e.scenario_id;
    t.utterance_index = e.turn;
    out.push_back(std::move(t));
  }
  return out;
}

nlohmann::json RecommendationService::catalog_json() const {
  const auto b = bundle();
  if (!b) throw UnavailableError("catalog is not loaded");
  return b->table().to_json();
}

bool RecommendationService::healthy() const { return bundle() != nullptr; }

nlohmann::json ReplayReport::to_json() const {
  auto table = nlohmann::json::object();
  for (const auto& [id, r] : per_scenario) {
    table[id] = {{"items", r.items},
                 {"coarse_hits", r.coarse_hits},
                 {"shown_hits", r.shown_hits},
                 {"coarse_recall", static_cast<double>(r.coarse_hits) / static_cast<double>(r.items)},
                 {"recall", static_cast<double>(r.shown_hits) / static_cast<double>(r.items)}};
  }
  return {{"items", items},
          {"k", k},
          {"scr", scr},
          {"coarse_recall", coarse_recall},
          {"fallbacks", fallbacks},
          {"latency_ms", {{"mean", latency_mean_ms}, {"p50", latency_p50_ms}, {"p99", latency_p99_ms}}},
          {"per_scenario", table}};
}

ReplayReport replay_evaluate(const ModelBundle& bundle, const std::vector<data::ReplayItem>& items, std::size_t k,
                             double threshold, std::size_t max_shown) {
  if (items.empty()) throw DataError("replay set is empty");
  ReplayReport report;
  report.items = items.size();
  report.k = k;
  std::vector<double> latencies;
  std::size_t coarse_hits = 0, shown_hits = 0;
  for (const auto& item : items) {
    if (!bundle.table().contains(item.scenario_id)) {
      throw NotFoundError("replay item names unknown scenario " + item.scenario_id);
    }
    std::optional<matcher::AspectFeatureVector> aspects;
    if (item.aspects && bundle.hybrid()) aspects = bundle.hybrid()->schema().encode(*item.aspects);
    const auto rec = decide(bundle, item.utterance, aspects ? &*aspects : nullptr, k, threshold, max_shown);
    auto& row = report.per_scenario[item.scenario_id];
    ++row.items;
    const bool coarse_hit = std::any_of(rec.coarse.begin(), rec.coarse.end(),
                                        [&](const coarse::Candidate& c) { return c.scenario_id == item.scenario_id; });
    const bool shown_hit = std::any_of(rec.items.begin(), rec.items.end(),
                                       [&](const ShownScenario& s) { return s.scenario_id == item.scenario_id; });
    row.coarse_hits += coarse_hit;
    row.shown_hits += shown_hit;
    coarse_hits += coarse_hit;
    shown_hits += shown_hit;
    report.fallbacks += rec.fallback;
    latencies.push_back(rec.latency_ms);
  }
  const auto n = static_cast<double>(items.size());
  report.scr = static_cast<double>(shown_hits) / n;
  report.coarse_recall = static_cast<double>(coarse_hits) / n;
  double sum = 0;
  for (double l : latencies) sum += l;
  report.latency_mean_ms = sum / n;
  report.latency_p50_ms = trainer::percentile(latencies, 0.5);
  report.latency_p99_ms = trainer::percentile(latencies, 0.99);
  return report;
}

}  // namespace ics::service
