#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "ics/data_prep/records.hpp"

namespace ics::data {

// Desk-scale stand-in for real service logs. Scenarios are (action, object)
// intents; utterances paraphrase them through synonym lists and filler words;
// session attributes correlate with the intent (order status with the action,
// product category with the object).
struct SyntheticConfig {
  std::size_t scenarios = 60;
  std::size_t sessions = 1500;
  std::size_t rare_scenarios = 3;      // scenarios given only `rare_sessions` sessions
  std::size_t rare_sessions = 3;
  std::size_t replay_items = 1000;
  double hover_rate = 0.3;             // chance of an extra hover on a wrong scenario
  double search_rate = 0.2;            // chance the positive operation is a search
  double attribute_rate = 0.8;         // chance a session carries attributes
  std::uint64_t seed = 7;
};

void to_json(nlohmann::json& j, const SyntheticConfig& c);
void from_json(const nlohmann::json& j, SyntheticConfig& c);

struct SyntheticCorpus {
  std::vector<CatalogEntry> catalog;
  std::vector<SessionLogRecord> logs;
  std::vector<ReplayItem> replay;
};

// Throws ConfigError when more scenarios are requested than intents exist or
// the rare scenarios need more sessions than available.
SyntheticCorpus generate_synthetic(const SyntheticConfig& config);

}  // namespace ics::data
