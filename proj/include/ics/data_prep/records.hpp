#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ics/matcher/aspects.hpp"

namespace ics::data {

struct Utterance {
  double ts = 0.0;
  std::string text;
};

enum class OperationKind { kClick, kHover, kSearch };

std::string to_string(OperationKind kind);
OperationKind operation_kind_from_string(const std::string& s);

struct Operation {
  double ts = 0.0;
  OperationKind kind = OperationKind::kClick;
  std::string scenario_id;
};

// One logged conversation. Timestamps are non-decreasing within utterances
// and within operations.
struct SessionLogRecord {
  std::string id;
  std::vector<Utterance> utterances;
  std::vector<Operation> operations;
  matcher::AttributeMap attributes;
};

SessionLogRecord session_from_json(const nlohmann::json& j);
nlohmann::json session_to_json(const SessionLogRecord& s);

// JSON-lines, one session per line. ParseError carries the line number.
std::vector<SessionLogRecord> load_session_logs(const std::filesystem::path& path);
void save_session_logs(const std::filesystem::path& path, const std::vector<SessionLogRecord>& sessions);

// One row of the scenario-solution table.
struct CatalogEntry {
  std::string scenario_id;
  std::string description;
  std::string solution;
  std::string domain;
};

// JSON-lines {scenario_id, description, solution, domain}. Throws ParseError
// on malformed lines, empty descriptions or duplicate ids.
std::vector<CatalogEntry> load_catalog(const std::filesystem::path& path);
void save_catalog(const std::filesystem::path& path, const std::vector<CatalogEntry>& catalog);

enum class Provenance { kOrganic, kUpsampled, kNegative };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

// (utterance, scenario description, label) with its origin. session_id,
// scenario_id and utterance_index locate the pair in the logs.
struct TrainingTriplet {
  std::string u;
  std::string s;
  int y = 0;
  std::optional<matcher::AttributeMap> aspects;
  Provenance provenance = Provenance::kOrganic;
  std::string session_id;
  std::string scenario_id;
  std::size_t utterance_index = 0;

  // Field-for-field equality ignoring provenance.
  bool same_pair(const TrainingTriplet& o) const;
};

nlohmann::json triplet_to_json(const TrainingTriplet& t);
TrainingTriplet triplet_from_json(const nlohmann::json& j);

std::vector<TrainingTriplet> load_triplets(const std::filesystem::path& path);
void save_triplets(const std::filesystem::path& path, const std::vector<TrainingTriplet>& triplets);

// Replay item for service evaluation: an utterance and its true scenario.
struct ReplayItem {
  std::string utterance;
  std::string scenario_id;
  std::optional<matcher::AttributeMap> aspects;
};

std::vector<ReplayItem> load_replay(const std::filesystem::path& path);
void save_replay(const std::filesystem::path& path, const std::vector<ReplayItem>& items);

}  // namespace ics::data
