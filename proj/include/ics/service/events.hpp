#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ics/matcher/aspects.hpp"

namespace ics::service {

enum class FeedbackOutcome { kAccepted, kRejected, kManual };

std::string to_string(FeedbackOutcome o);
// Throws ValidationError on an unknown outcome name.
FeedbackOutcome feedback_outcome_from_string(const std::string& s);

// One immutable entry of the service log. Which fields are meaningful
// depends on `type`:
//   open:      session_id, ts, aspects
//   recommend: session_id, ts, turn, text, shown, fallback, latency_ms, model
//   feedback:  session_id, ts, turn, outcome, scenario_id (accepted only)
//   close:     session_id, ts, resolved
struct Event {
  enum class Type { kOpen, kRecommend, kFeedback, kClose };

  Type type = Type::kOpen;
  std::string session_id;
  double ts = 0.0;  // seconds
  std::size_t turn = 0;
  std::string text;
  std::vector<std::string> shown;
  bool fallback = false;
  double latency_ms = 0.0;
  std::string model;
  FeedbackOutcome outcome = FeedbackOutcome::kManual;
  std::string scenario_id;
  bool resolved = false;
  std::optional<matcher::AttributeMap> aspects;
};

nlohmann::json event_to_json(const Event& e);
Event event_from_json(const nlohmann::json& j);

// Append-only, thread-safe. With a sink path every event is also written as
// one JSON line and flushed before append() returns.
class EventLog {
 public:
  EventLog() = default;
  explicit EventLog(const std::filesystem::path& sink);

  void append(const Event& e);
  std::vector<Event> events() const;
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::vector<Event> events_;
  std::optional<std::ofstream> sink_;
};

// Throws ParseError with the line number on a malformed line.
std::vector<Event> load_event_log(const std::filesystem::path& path);

// Business metrics for a reporting window.
//
//   SAR = accepted / judged turns, where a judged turn is a non-fallback
//         turn that received feedback (accepted, rejected or manual)
//   SCR = distinct scenarios ever shown / catalog size
//   AST = mean(close ts - open ts) over sessions closed in the window
//
// Rates with an empty denominator and AST with no closed session are absent
// rather than zero. CSR and BCR need live customers and several business
// lines; they are carried as manually entered fields and stay absent here.
struct MetricsSnapshot {
  std::optional<double> sar;
  std::optional<double> scr;
  std::optional<double> ast_seconds;
  std::optional<double> csr;
  std::optional<double> bcr;

  std::size_t sessions_opened = 0;
  std::size_t sessions_closed = 0;
  std::size_t sessions_resolved = 0;
  std::size_t turns = 0;
  std::size_t fallback_turns = 0;
  std::size_t judged_turns = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t manual = 0;
  std::size_t distinct_shown = 0;
  std::size_t catalog_size = 0;
  double latency_p50_ms = 0.0;
  double latency_p99_ms = 0.0;
  std::optional<double> window_start;
  std::optional<double> window_end;

  nlohmann::json to_json() const;
  bool operator==(const MetricsSnapshot&) const = default;
};

struct Window {
  std::optional<double> since;  // inclusive
  std::optional<double> until;  // inclusive
  bool contains(double ts) const { return (!since || ts >= *since) && (!until || ts <= *until); }
};

// Pure function of the log; replaying the same events gives the same
// snapshot.
MetricsSnapshot compute_metrics(const std::vector<Event>& events, std::size_t catalog_size, const Window& window = {});

}  // namespace ics::service
