#include "ics/data_prep/records.hpp"

#include <fstream>
#include <functional>
#include <set>

#include "ics/errors.hpp"

namespace ics::data {
namespace {

template <typename T>
std::vector<T> read_jsonl(const std::filesystem::path& path, const std::function<T(const nlohmann::json&)>& convert) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::vector<T> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(convert(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ": " + e.what(), line_no);
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ": " + e.what(), line_no);
    } catch (const SchemaError& e) {
      throw ParseError(path.string() + ": " + e.what(), line_no);
    }
  }
  return out;
}

template <typename T>
void write_jsonl(const std::filesystem::path& path, const std::vector<T>& items,
                 const std::function<nlohmann::json(const T&)>& convert) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& item : items) out << convert(item).dump() << '\n';
}

}  // namespace

std::string to_string(OperationKind kind) {
  switch (kind) {
    case OperationKind::kClick: return "click";
    case OperationKind::kHover: return "hover";
    case OperationKind::kSearch: return "search";
  }
  return "click";
}

OperationKind operation_kind_from_string(const std::string& s) {
  if (s == "click") return OperationKind::kClick;
  if (s == "hover") return OperationKind::kHover;
  if (s == "search") return OperationKind::kSearch;
  throw ParseError("unknown operation kind '" + s + "'");
}

SessionLogRecord session_from_json(const nlohmann::json& j) {
  SessionLogRecord s;
  s.id = j.at("id").get<std::string>();
  if (s.id.empty()) throw ParseError("session id must be non-empty");
  for (const auto& u : j.value("utterances", nlohmann::json::array())) {
    s.utterances.push_back({u.at("ts").get<double>(), u.at("text").get<std::string>()});
  }
  for (const auto& o : j.value("operations", nlohmann::json::array())) {
    s.operations.push_back({o.at("ts").get<double>(), operation_kind_from_string(o.at("kind").get<std::string>()),
                            o.at("scenario_id").get<std::string>()});
  }
  for (std::size_t i = 1; i < s.utterances.size(); ++i) {
    if (s.utterances[i].ts < s.utterances[i - 1].ts) {
      throw ParseError("session " + s.id + ": utterance timestamps decrease");
    }
  }
  for (std::size_t i = 1; i < s.operations.size(); ++i) {
    if (s.operations[i].ts < s.operations[i - 1].ts) {
      throw ParseError("session " + s.id + ": operation timestamps decrease");
    }
  }
  if (j.contains("attributes")) s.attributes = matcher::attributes_from_json(j.at("attributes"));
  return s;
}

nlohmann::json session_to_json(const SessionLogRecord& s) {
  auto utterances = nlohmann::json::array();
  for (const auto& u : s.utterances) utterances.push_back({{"ts", u.ts}, {"text", u.text}});
  auto operations = nlohmann::json::array();
  for (const auto& o : s.operations) {
    operations.push_back({{"ts", o.ts}, {"kind", to_string(o.kind)}, {"scenario_id", o.scenario_id}});
  }
  return {{"id", s.id},
          {"utterances", utterances},
          {"operations", operations},
          {"attributes", matcher::attributes_to_json(s.attributes)}};
}

std::vector<SessionLogRecord> load_session_logs(const std::filesystem::path& path) {
  return read_jsonl<SessionLogRecord>(path, session_from_json);
}

void save_session_logs(const std::filesystem::path& path, const std::vector<SessionLogRecord>& sessions) {
  write_jsonl<SessionLogRecord>(path, sessions, session_to_json);
}

std::vector<CatalogEntry> load_catalog(const std::filesystem::path& path) {
  std::set<std::string> seen;
  return read_jsonl<CatalogEntry>(path, [&](const nlohmann::json& j) {
    CatalogEntry e{j.at("scenario_id").get<std::string>(), j.at("description").get<std::string>(),
                   j.value("solution", std::string()), j.value("domain", std::string())};
    if (e.scenario_id.empty()) throw ParseError("scenario_id must be non-empty");
    if (e.description.find_first_not_of(" \t\r\n") == std::string::npos) {
      throw ParseError("scenario " + e.scenario_id + " has an empty description");
    }
    if (!seen.insert(e.scenario_id).second) throw ParseError("duplicate scenario_id " + e.scenario_id);
    return e;
  });
}

void save_catalog(const std::filesystem::path& path, const std::vector<CatalogEntry>& catalog) {
  write_jsonl<CatalogEntry>(path, catalog, [](const CatalogEntry& e) {
    return nlohmann::json{
        {"scenario_id", e.scenario_id}, {"description", e.description}, {"solution", e.solution}, {"domain", e.domain}};
  });
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::kOrganic: return "organic";
    case Provenance::kUpsampled: return "upsampled";
    case Provenance::kNegative: return "negative";
  }
  return "organic";
}

Provenance provenance_from_string(const std::string& s) {
  if (s == "organic") return Provenance::kOrganic;
  if (s == "upsampled") return Provenance::kUpsampled;
  if (s == "negative") return Provenance::kNegative;
  throw ParseError("unknown provenance '" + s + "'");
}

bool TrainingTriplet::same_pair(const TrainingTriplet& o) const {
  return u == o.u && s == o.s && y == o.y && aspects == o.aspects && session_id == o.session_id &&
         scenario_id == o.scenario_id && utterance_index == o.utterance_index;
}

nlohmann::json triplet_to_json(const TrainingTriplet& t) {
  nlohmann::json j{{"u", t.u},
                   {"s", t.s},
                   {"y", t.y},
                   {"provenance", to_string(t.provenance)},
                   {"session_id", t.session_id},
                   {"scenario_id", t.scenario_id},
                   {"utterance_index", t.utterance_index}};
  if (t.aspects) j["aspects"] = matcher::attributes_to_json(*t.aspects);
  return j;
}

TrainingTriplet triplet_from_json(const nlohmann::json& j) {
  TrainingTriplet t;
  t.u = j.at("u").get<std::string>();
  t.s = j.at("s").get<std::string>();
  t.y = j.at("y").get<int>();
  if (t.y != 0 && t.y != 1) throw ParseError("label y must be 0 or 1");
  t.provenance = provenance_from_string(j.value("provenance", std::string("organic")));
  t.session_id = j.value("session_id", std::string());
  t.scenario_id = j.value("scenario_id", std::string());
  t.utterance_index = j.value("utterance_index", std::size_t{0});
  if (j.contains("aspects") && !j.at("aspects").is_null()) t.aspects = matcher::attributes_from_json(j.at("aspects"));
  return t;
}

std::vector<TrainingTriplet> load_triplets(const std::filesystem::path& path) {
  return read_jsonl<TrainingTriplet>(path, triplet_from_json);
}

void save_triplets(const std::filesystem::path& path, const std::vector<TrainingTriplet>& triplets) {
  write_jsonl<TrainingTriplet>(path, triplets, triplet_to_json);
}

std::vector<ReplayItem> load_replay(const std::filesystem::path& path) {
  return read_jsonl<ReplayItem>(path, [](const nlohmann::json& j) {
    ReplayItem r{j.at("utterance").get<std::string>(), j.at("scenario_id").get<std::string>(), std::nullopt};
    if (j.contains("aspects") && !j.at("aspects").is_null()) r.aspects = matcher::attributes_from_json(j.at("aspects"));
    return r;
  });
}

void save_replay(const std::filesystem::path& path, const std::vector<ReplayItem>& items) {
  write_jsonl<ReplayItem>(path, items, [](const ReplayItem& r) {
    nlohmann::json j{{"utterance", r.utterance}, {"scenario_id", r.scenario_id}};
    if (r.aspects) j["aspects"] = matcher::attributes_to_json(*r.aspects);
    return j;
  });
}

}  // namespace ics::data
