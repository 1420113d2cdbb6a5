#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ics/data_prep/records.hpp"

namespace ics::data {

struct ExtractionResult {
  std::vector<TrainingTriplet> positives;  // organic, label 1
  std::size_t skipped_no_utterance = 0;    // operation before any utterance
  std::size_t skipped_unknown_scenario = 0;
  std::size_t hovers_ignored = 0;
  std::size_t duplicates_merged = 0;
};

// Each click or search pairs the latest utterance with ts <= the operation ts
// with the scenario description. Pairs are unique per (session, utterance
// index, scenario); output is ordered by session id, then utterance index,
// then scenario id.
ExtractionResult extract_positives(const std::vector<SessionLogRecord>& logs, const std::vector<CatalogEntry>& catalog);

// Scenarios with fewer than `rarity_threshold` organic positives are
// replicated until they hold exactly factor x their organic count; copies are
// tagged upsampled and appended after each scenario's organic block.
std::vector<TrainingTriplet> upsample_rare(const std::vector<TrainingTriplet>& positives, std::size_t rarity_threshold,
                                           std::size_t factor = 100);

// Exactly positives.size() label-0 triplets. Each pairs a uniformly drawn
// logged utterance with a uniformly drawn scenario never positively linked to
// that utterance text anywhere in `linked`. Throws DataError when the catalog
// has fewer than 2 scenarios or no admissible pair can be found.
std::vector<TrainingTriplet> sample_negatives(const std::vector<TrainingTriplet>& positives,
                                              const std::vector<TrainingTriplet>& linked,
                                              const std::vector<SessionLogRecord>& logs,
                                              const std::vector<CatalogEntry>& catalog, std::uint64_t seed);

struct SplitRatios {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

struct DatasetSplit {
  std::vector<TrainingTriplet> train;
  std::vector<TrainingTriplet> validation;
  std::vector<TrainingTriplet> test;
  std::array<std::size_t, 3> sessions{};  // session counts per split
};

// Assigns whole sessions to splits. Split sizes are round(ratio * sessions)
// for train and validation, the remainder for test. Sessions are ordered by
// their most frequent scenario before assignment so each scenario spreads
// across splits in proportion. Throws ConfigError unless ratios are
// non-negative and sum to 1.
DatasetSplit split(const std::vector<TrainingTriplet>& dataset, const SplitRatios& ratios, std::uint64_t seed);

struct PrepConfig {
  std::size_t rarity_threshold = 50;
  std::size_t upsample_factor = 100;
  SplitRatios ratios;
  std::uint64_t seed = 17;
  bool attach_aspects = true;  // copy session attributes onto triplets
};

void to_json(nlohmann::json& j, const PrepConfig& c);
void from_json(const nlohmann::json& j, PrepConfig& c);

// Findings for human review of automatically generated pairs.
struct LintReport {
  std::size_t sessions = 0;
  std::size_t utterances = 0;
  std::size_t empty_utterances = 0;
  std::size_t empty_descriptions = 0;
  std::size_t unknown_scenario_operations = 0;
  std::size_t length_outliers = 0;  // utterances longer than mean + 3 sd tokens
  double mean_utterance_tokens = 0.0;
  std::vector<std::string> examples;  // first few findings, human-readable

  nlohmann::json to_json() const;
};

LintReport lint(const std::vector<SessionLogRecord>& logs, const std::vector<CatalogEntry>& catalog);

struct PreparedDataset {
  DatasetSplit split;
  ExtractionResult extraction;
  std::size_t organic_positives = 0;
  std::size_t augmented_positives = 0;
  std::size_t negatives = 0;
  std::map<std::string, std::size_t> organic_per_scenario;
  std::map<std::string, std::size_t> augmented_per_scenario;
  LintReport lint;

  nlohmann::json summary() const;
};

// extract -> upsample -> negatives -> split; a pure function of its inputs.
PreparedDataset prepare_dataset(const std::vector<SessionLogRecord>& logs, const std::vector<CatalogEntry>& catalog,
                                const PrepConfig& config);

}  // namespace ics::data
