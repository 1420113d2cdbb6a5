#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ics/coarse/ranker.hpp"
#include "ics/data_prep/records.hpp"
#include "ics/matcher/hybrid.hpp"
#include "ics/matcher/scorer.hpp"
#include "ics/service/events.hpp"

namespace ics::service {

struct SolutionEntry {
  std::string scenario_id;
  std::string description;
  std::string solution;
  std::string domain;
};

// Scenario id -> description and solution, one entry per catalog scenario.
class SolutionTable {
 public:
  SolutionTable() = default;
  // Throws ValidationError on an empty id or description, or a duplicate id.
  explicit SolutionTable(const std::vector<data::CatalogEntry>& catalog);

  const std::vector<SolutionEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool contains(const std::string& id) const { return positions_.count(id) > 0; }
  // Throws NotFoundError.
  const SolutionEntry& at(const std::string& id) const;
  std::size_t position(const std::string& id) const;
  // FNV-1a over the entries; changes with any edit.
  std::uint64_t version() const noexcept { return version_; }

  nlohmann::json to_json() const;

 private:
  std::vector<SolutionEntry> entries_;
  std::map<std::string, std::size_t> positions_;
  std::uint64_t version_ = 0;
};

// Everything a recommendation needs, immutable once built and shared
// read-only between requests. Replacing the service's bundle is the hot-swap
// path.
class ModelBundle {
 public:
  ModelBundle(std::shared_ptr<const matcher::StudentModel> student,
              std::shared_ptr<const matcher::HybridModel> hybrid, std::shared_ptr<const coarse::CoarseRanker> ranker,
              SolutionTable table);

  const matcher::StudentModel& student() const { return *student_; }
  const matcher::HybridModel* hybrid() const { return hybrid_.get(); }
  const coarse::CoarseRanker& ranker() const { return *ranker_; }
  const coarse::ScenarioIndex& index() const { return index_; }
  const SolutionTable& table() const { return table_; }
  const matcher::CatalogScorer& student_scorer() const { return *student_scorer_; }
  // Built on the hybrid's own copy of the student.
  const matcher::CatalogScorer* hybrid_scorer() const { return hybrid_scorer_.get(); }

 private:
  std::shared_ptr<const matcher::StudentModel> student_;
  std::shared_ptr<const matcher::HybridModel> hybrid_;
  std::shared_ptr<const coarse::CoarseRanker> ranker_;
  SolutionTable table_;
  coarse::ScenarioIndex index_;
  std::unique_ptr<matcher::CatalogScorer> student_scorer_;
  std::unique_ptr<matcher::CatalogScorer> hybrid_scorer_;
};

struct ServiceConfig {
  std::filesystem::path vocabulary;
  std::filesystem::path student_checkpoint;
  std::optional<std::filesystem::path> hybrid_checkpoint;
  std::filesystem::path embeddings;
  std::filesystem::path tfidf;
  std::filesystem::path catalog;
  std::optional<std::filesystem::path> event_log;

  std::size_t k = 50;
  double threshold = 0.5;
  std::size_t max_shown = 3;
  std::string host = "127.0.0.1";
  int port = 8080;
  // Score the concatenation of the last `history_turns` utterances instead of
  // the latest one alone.
  bool use_history = false;
  std::size_t history_turns = 3;

  // Throws ConfigError on K = 0, max_shown = 0 or a threshold outside [0, 1].
  void validate() const;
};

// Relative paths resolve against `base_dir`.
ServiceConfig service_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json service_config_to_json(const ServiceConfig& c);
ServiceConfig load_service_config(const std::filesystem::path& path);

// Loads the vocabulary, student, optional hybrid, embeddings, tf-idf and
// catalog named by the config.
std::shared_ptr<const ModelBundle> load_bundle(const ServiceConfig& config);

struct ShownScenario {
  std::string scenario_id;
  double score = 0.0;
  std::string description;
  std::string solution;
  std::string domain;
};

struct Recommendation {
  std::string session_id;
  std::size_t turn = 0;  // 0-based within the session
  std::vector<ShownScenario> items;  // descending score, each >= threshold
  bool fallback = false;  // nothing cleared the threshold
  double latency_ms = 0.0;
  std::string model;  // student | hybrid
  std::vector<coarse::Candidate> coarse;  // stage-1 list the fine model scored

  nlohmann::json to_json() const;
};

// Stateless two-stage decision: coarse top-K, fine scores, threshold, cap.
// `aspects` routes to the hybrid model when the bundle has one.
Recommendation decide(const ModelBundle& bundle, const std::string& text, const matcher::AspectFeatureVector* aspects,
                      std::size_t k, double threshold, std::size_t max_shown);

class RecommendationService {
 public:
  using Clock = std::function<double()>;  // seconds

  // A null bundle starts the service unavailable until set_bundle().
  RecommendationService(std::shared_ptr<const ModelBundle> bundle, ServiceConfig config, Clock clock = {});

  void set_bundle(std::shared_ptr<const ModelBundle> bundle);
  std::shared_ptr<const ModelBundle> bundle() const;
  const ServiceConfig& config() const noexcept { return config_; }

  // Aspects are validated against the hybrid schema when one is loaded.
  std::string open(const std::optional<matcher::AttributeMap>& aspects = std::nullopt);
  // Throws ValidationError on blank text, NotFoundError on an unknown
  // session, ValidationError on a closed session and UnavailableError
  // without models.
  Recommendation recommend(const std::string& session_id, const std::string& text);
  // Accepted needs the scenario shown in that turn; rejected needs a
  // non-fallback turn. One feedback per turn.
  void feedback(const std::string& session_id, std::size_t turn, FeedbackOutcome outcome,
                const std::string& scenario_id = {});
  void close(const std::string& session_id, bool resolved);

  MetricsSnapshot metrics(const Window& window = {}) const;
  const EventLog& event_log() const noexcept { return *log_; }
  // Accepted turns as organic positives for future training.
  std::vector<data::TrainingTriplet> export_positives() const;
  nlohmann::json catalog_json() const;
  bool healthy() const;

 private:
  struct Turn {
    std::string text;
    std::vector<std::string> shown;
    bool fallback = false;
    bool has_feedback = false;
  };
  struct Session {
    std::mutex mutex;
    std::string id;
    double opened = 0.0;
    double last_activity = 0.0;
    std::optional<matcher::AttributeMap> attributes;
    std::optional<matcher::AspectFeatureVector> aspects;
    std::vector<Turn> turns;
    bool closed = false;
    bool resolved = false;
  };

  std::shared_ptr<Session> find(const std::string& id) const;
  double now() const;

  ServiceConfig config_;
  Clock clock_;
  mutable std::mutex bundle_mutex_;
  std::shared_ptr<const ModelBundle> bundle_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::atomic<std::size_t> next_id_{1};
  std::unique_ptr<EventLog> log_;
};

struct ReplayReport {
  std::size_t items = 0;
  std::size_t k = 0;
  double scr = 0.0;  // true scenario among the shown items
  double coarse_recall = 0.0;  // true scenario within the stage-1 top-K
  std::size_t fallbacks = 0;
  double latency_mean_ms = 0.0;
  double latency_p50_ms = 0.0;
  double latency_p99_ms = 0.0;
  struct ScenarioRecall {
    std::size_t items = 0;
    std::size_t coarse_hits = 0;
    std::size_t shown_hits = 0;
  };
  std::map<std::string, ScenarioRecall> per_scenario;

  nlohmann::json to_json() const;
};

// Runs every replay item through decide(). Throws DataError on an empty set
// and NotFoundError on a true scenario absent from the catalog.
ReplayReport replay_evaluate(const ModelBundle& bundle, const std::vector<data::ReplayItem>& items, std::size_t k,
                             double threshold, std::size_t max_shown);

}  // namespace ics::service
