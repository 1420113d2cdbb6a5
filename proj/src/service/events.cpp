#include "ics/service/events.hpp"

#include <map>
#include <set>

#include "ics/errors.hpp"
#include "ics/trainer/metrics.hpp"

namespace ics::service {
namespace {

std::string type_name(Event::Type t) {
  switch (t) {
    case Event::Type::kOpen: return "open";
    case Event::Type::kRecommend: return "recommend";
    case Event::Type::kFeedback: return "feedback";
    case Event::Type::kClose: return "close";
  }
  return "open";
}

Event::Type type_from_name(const std::string& s) {
  if (s == "open") return Event::Type::kOpen;
  if (s == "recommend") return Event::Type::kRecommend;
  if (s == "feedback") return Event::Type::kFeedback;
  if (s == "close") return Event::Type::kClose;
  throw ParseError("unknown event type '" + s + "'");
}

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

}  // namespace

std::string to_string(FeedbackOutcome o) {
  switch (o) {
    case FeedbackOutcome::kAccepted: return "accepted";
    case FeedbackOutcome::kRejected: return "rejected";
    case FeedbackOutcome::kManual: return "manual";
  }
  return "manual";
}

FeedbackOutcome feedback_outcome_from_string(const std::string& s) {
  if (s == "accepted") return FeedbackOutcome::kAccepted;
  if (s == "rejected") return FeedbackOutcome::kRejected;
  if (s == "manual") return FeedbackOutcome::kManual;
  throw ValidationError("unknown feedback outcome '" + s + "'; expected accepted, rejected or manual");
}

nlohmann::json event_to_json(const Event& e) {
  nlohmann::json j{{"type", type_name(e.type)}, {"session_id", e.session_id}, {"ts", e.ts}};
  switch (e.type) {
    case Event::Type::kOpen:
      if (e.aspects) j["aspects"] = matcher::attributes_to_json(*e.aspects);
      break;
    case Event::Type::kRecommend:
      j["turn"] = e.turn;
      j["text"] = e.text;
      j["shown"] = e.shown;
      j["fallback"] = e.fallback;
      j["latency_ms"] = e.latency_ms;
      j["model"] = e.model;
      break;
    case Event::Type::kFeedback:
      j["turn"] = e.turn;
      j["outcome"] = to_string(e.outcome);
      if (e.outcome == FeedbackOutcome::kAccepted) j["scenario_id"] = e.scenario_id;
      break;
    case Event::Type::kClose:
      j["resolved"] = e.resolved;
      break;
  }
  return j;
}

Event event_from_json(const nlohmann::json& j) {
  try {
    Event e;
    e.type = type_from_name(j.at("type").get<std::string>());
    e.session_id = j.at("session_id").get<std::string>();
    e.ts = j.at("ts").get<double>();
    e.turn = j.value("turn", std::size_t{0});
    e.text = j.value("text", std::string());
    e.shown = j.value("shown", std::vector<std::string>{});
    e.fallback = j.value("fallback", false);
    e.latency_ms = j.value("latency_ms", 0.0);
    e.model = j.value("model", std::string());
    if (j.contains("outcome")) {
      try {
        e.outcome = feedback_outcome_from_string(j.at("outcome").get<std::string>());
      } catch (const ValidationError& err) {
        throw ParseError(err.what());
      }
    }
    e.scenario_id = j.value("scenario_id", std::string());
    e.resolved = j.value("resolved", false);
    if (j.contains("aspects")) e.aspects = matcher::attributes_from_json(j.at("aspects"));
    return e;
  } catch (const nlohmann::json::exception& err) {
    throw ParseError(std::string("malformed event: ") + err.what());
  }
}

EventLog::EventLog(const std::filesystem::path& sink) {
  sink_.emplace(sink, std::ios::app);
  if (!*sink_) throw Error("cannot open event log '" + sink.string() + "' for appending");
}

void EventLog::append(const Event& e) {
  std::lock_guard lock(mutex_);
  if (sink_) {
    *sink_ << event_to_json(e).dump() << '\n';
    sink_->flush();
  }
  events_.push_back(e);
}

std::vector<Event> EventLog::events() const {
  std::lock_guard lock(mutex_);
  return events_;
}

std::size_t EventLog::size() const {
  std::lock_guard lock(mutex_);
  return events_.size();
}

std::vector<Event> load_event_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open event log '" + path.string() + "'");
  std::vector<Event> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(event_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& err) {
      throw ParseError(err.what(), number);
    } catch (const ParseError& err) {
      throw ParseError(err.what(), number);
    }
  }
  return out;
}

nlohmann::json MetricsSnapshot::to_json() const {
  return {{"sar", optional_json(sar)},
          {"scr", optional_json(scr)},
          {"ast_seconds", optional_json(ast_seconds)},
          {"csr", optional_json(csr)},
          {"bcr", optional_json(bcr)},
          {"counts",
           {{"sessions_opened", sessions_opened},
            {"sessions_closed", sessions_closed},
            {"sessions_resolved", sessions_resolved},
            {"turns", turns},
            {"fallback_turns", fallback_turns},
            {"judged_turns", judged_turns},
            {"accepted", accepted},
            {"rejected", rejected},
            {"manual", manual},
            {"distinct_shown", distinct_shown},
            {"catalog_size", catalog_size}}},
          {"latency_ms", {{"p50", latency_p50_ms}, {"p99", latency_p99_ms}}},
          {"window", {{"start", optional_json(window_start)}, {"end", optional_json(window_end)}}}};
}

MetricsSnapshot compute_metrics(const std::vector<Event>& events, std::size_t catalog_size, const Window& window) {
  MetricsSnapshot m;
  m.catalog_size = catalog_size;
  std::map<std::string, double> opened_at;
  std::map<std::pair<std::string, std::size_t>, bool> turn_fallback;
  std::set<std::string> shown;
  std::vector<double> latencies;
  double duration_sum = 0.0;

  for (const auto& e : events) {
    // Open and recommend events are indexed regardless of the window so that
    // later feedback and close events can be resolved.
    if (e.type == Event::Type::kOpen) opened_at[e.session_id] = e.ts;
    if (e.type == Event::Type::kRecommend) turn_fallback[{e.session_id, e.turn}] = e.fallback;
    if (!window.contains(e.ts)) continue;
    m.window_start = m.window_start ? std::min(*m.window_start, e.ts) : e.ts;
    m.window_end = m.window_end ? std::max(*m.window_end, e.ts) : e.ts;

    switch (e.type) {
      case Event::Type::kOpen:
        ++m.sessions_opened;
        break;
      case Event::Type::kRecommend:
        ++m.turns;
        if (e.fallback) ++m.fallback_turns;
        shown.insert(e.shown.begin(), e.shown.end());
        latencies.push_back(e.latency_ms);
        break;
      case Event::Type::kFeedback: {
        const auto it = turn_fallback.find({e.session_id, e.turn});
        const bool fallback = it != turn_fallback.end() && it->second;
        if (e.outcome == FeedbackOutcome::kAccepted) ++m.accepted;
        if (e.outcome == FeedbackOutcome::kRejected) ++m.rejected;
        if (e.outcome == FeedbackOutcome::kManual) ++m.manual;
        if (!fallback) ++m.judged_turns;
        break;
      }
      case Event::Type::kClose: {
        ++m.sessions_closed;
        if (e.resolved) ++m.sessions_resolved;
        const auto it = opened_at.find(e.session_id);
        if (it != opened_at.end()) duration_sum += e.ts - it->second;
        break;
      }
    }
  }

  if (m.judged_turns > 0) m.sar = static_cast<double>(m.accepted) / static_cast<double>(m.judged_turns);
  m.distinct_shown = shown.size();
  if (catalog_size > 0) m.scr = static_cast<double>(shown.size()) / static_cast<double>(catalog_size);
  if (m.sessions_closed > 0) m.ast_seconds = duration_sum / static_cast<double>(m.sessions_closed);
  if (!latencies.empty()) {
    m.latency_p50_ms = trainer::percentile(latencies, 0.5);
    m.latency_p99_ms = trainer::percentile(latencies, 0.99);
  }
  return m;
}

}  // namespace ics::service
