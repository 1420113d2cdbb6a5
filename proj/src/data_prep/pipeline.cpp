#include "ics/data_prep/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>
#include <unordered_map>

#include "ics/errors.hpp"
#include "ics/numerics/rng.hpp"
#include "ics/text/tokenizer.hpp"

namespace ics::data {
namespace {

constexpr std::size_t kMaxDrawsPerNegative = 10000;
constexpr std::size_t kLintExamples = 20;

std::map<std::string, const CatalogEntry*> index_catalog(const std::vector<CatalogEntry>& catalog) {
  std::map<std::string, const CatalogEntry*> out;
  for (const auto& e : catalog) out[e.scenario_id] = &e;
  return out;
}

bool is_blank(const std::string& s) { return text::tokenize(s).empty(); }

}  // namespace

ExtractionResult extract_positives(const std::vector<SessionLogRecord>& logs,
                                   const std::vector<CatalogEntry>& catalog) {
  const auto scenarios = index_catalog(catalog);
  std::vector<const SessionLogRecord*> sessions;
  for (const auto& s : logs) sessions.push_back(&s);
  std::stable_sort(sessions.begin(), sessions.end(), [](auto* a, auto* b) { return a->id < b->id; });

  ExtractionResult result;
  for (const auto* session : sessions) {
    std::set<std::pair<std::size_t, std::string>> pairs;
    for (const auto& op : session->operations) {
      if (op.kind == OperationKind::kHover) {
        ++result.hovers_ignored;
        continue;
      }
      if (!scenarios.count(op.scenario_id)) {
        ++result.skipped_unknown_scenario;
        continue;
      }
      // Latest utterance at or before the operation.
      auto it = std::upper_bound(session->utterances.begin(), session->utterances.end(), op.ts,
                                 [](double ts, const Utterance& u) { return ts < u.ts; });
      if (it == session->utterances.begin()) {
        ++result.skipped_no_utterance;
        continue;
      }
      const auto index = static_cast<std::size_t>(std::prev(it) - session->utterances.begin());
      if (!pairs.emplace(index, op.scenario_id).second) ++result.duplicates_merged;
    }
    for (const auto& [index, scenario] : pairs) {
      TrainingTriplet t;
      t.u = session->utterances[index].text;
      t.s = scenarios.at(scenario)->description;
      t.y = 1;
      if (!session->attributes.empty()) t.aspects = session->attributes;
      t.provenance = Provenance::kOrganic;
      t.session_id = session->id;
      t.scenario_id = scenario;
      t.utterance_index = index;
      result.positives.push_back(std::move(t));
    }
  }
  return result;
}

std::vector<TrainingTriplet> upsample_rare(const std::vector<TrainingTriplet>& positives, std::size_t rarity_threshold,
                                           std::size_t factor) {
  if (factor == 0) throw ConfigError("up-sampling factor must be at least 1");
  std::map<std::string, std::vector<const TrainingTriplet*>> by_scenario;
  for (const auto& t : positives) {
    if (t.provenance == Provenance::kOrganic) by_scenario[t.scenario_id].push_back(&t);
  }
  std::vector<TrainingTriplet> out;
  for (const auto& [scenario, organic] : by_scenario) {
    for (const auto* t : organic) out.push_back(*t);
    if (organic.size() >= rarity_threshold) continue;
    for (std::size_t round = 1; round < factor; ++round) {
      for (const auto* t : organic) {
        out.push_back(*t);
        out.back().provenance = Provenance::kUpsampled;
      }
    }
  }
  return out;
}

std::vector<TrainingTriplet> sample_negatives(const std::vector<TrainingTriplet>& positives,
                                              const std::vector<TrainingTriplet>& linked,
                                              const std::vector<SessionLogRecord>& logs,
                                              const std::vector<CatalogEntry>& catalog, std::uint64_t seed) {
  if (catalog.size() < 2) throw DataError("negative sampling needs at least 2 scenarios in the catalog");
  struct PoolEntry {
    const SessionLogRecord* session;
    std::size_t index;
  };
  std::vector<PoolEntry> pool;
  std::vector<const SessionLogRecord*> sessions;
  for (const auto& s : logs) sessions.push_back(&s);
  std::stable_sort(sessions.begin(), sessions.end(), [](auto* a, auto* b) { return a->id < b->id; });
  for (const auto* s : sessions) {
    for (std::size_t i = 0; i < s->utterances.size(); ++i) {
      if (!is_blank(s->utterances[i].text)) pool.push_back({s, i});
    }
  }
  if (positives.empty()) return {};
  if (pool.empty()) throw DataError("negative sampling found no non-empty utterances in the logs");

  std::unordered_map<std::string, std::set<std::string>> links;
  for (const auto& t : linked) {
    if (t.y == 1) links[t.u].insert(t.scenario_id);
  }
  const bool any_admissible = std::any_of(pool.begin(), pool.end(), [&](const PoolEntry& e) {
    auto it = links.find(e.session->utterances[e.index].text);
    return it == links.end() || it->second.size() < catalog.size();
  });
  if (!any_admissible) throw DataError("every logged utterance is linked to every scenario; no negatives exist");

  nn::Rng rng(seed);
  std::vector<TrainingTriplet> out;
  out.reserve(positives.size());
  for (std::size_t n = 0; n < positives.size(); ++n) {
    bool placed = false;
    for (std::size_t attempt = 0; attempt < kMaxDrawsPerNegative && !placed; ++attempt) {
      const auto& entry = pool[rng.index(pool.size())];
      const auto& scenario = catalog[rng.index(catalog.size())];
      const auto& text = entry.session->utterances[entry.index].text;
      auto it = links.find(text);
      if (it != links.end() && it->second.count(scenario.scenario_id)) continue;
      TrainingTriplet t;
      t.u = text;
      t.s = scenario.description;
      t.y = 0;
      if (!entry.session->attributes.empty()) t.aspects = entry.session->attributes;
      t.provenance = Provenance::kNegative;
      t.session_id = entry.session->id;
      t.scenario_id = scenario.scenario_id;
      t.utterance_index = entry.index;
      out.push_back(std::move(t));
      placed = true;
    }
    if (!placed) throw DataError("negative sampling could not find an unlinked pair");
  }
  return out;
}

DatasetSplit split(const std::vector<TrainingTriplet>& dataset, const SplitRatios& ratios, std::uint64_t seed) {
  const std::array<double, 3> r{ratios.train, ratios.validation, ratios.test};
  if (std::any_of(r.begin(), r.end(), [](double x) { return x < 0.0; }) ||
      std::abs(r[0] + r[1] + r[2] - 1.0) > 1e-9) {
    throw ConfigError("split ratios must be non-negative and sum to 1");
  }
  // Most frequent positive scenario per session ("" for negative-only ones).
  std::map<std::string, std::map<std::string, std::size_t>> scenario_counts;
  for (const auto& t : dataset) {
    auto& counts = scenario_counts[t.session_id];
    if (t.y == 1) ++counts[t.scenario_id];
  }
  std::map<std::string, std::vector<std::string>> strata;
  for (const auto& [session, counts] : scenario_counts) {
    std::string key;
    std::size_t best = 0;
    for (const auto& [scenario, c] : counts) {
      if (c > best) best = c, key = scenario;
    }
    strata[key].push_back(session);
  }
  nn::Rng rng(seed);
  std::vector<std::string> order;
  for (auto& [key, sessions] : strata) {
    std::shuffle(sessions.begin(), sessions.end(), rng.engine());
    order.insert(order.end(), sessions.begin(), sessions.end());
  }

  const auto total = order.size();
  std::array<std::size_t, 3> target{};
  target[0] = static_cast<std::size_t>(std::llround(r[0] * static_cast<double>(total)));
  target[1] = std::min(total - target[0], static_cast<std::size_t>(std::llround(r[1] * static_cast<double>(total))));
  target[2] = total - target[0] - target[1];

  std::map<std::string, std::size_t> assignment;
  DatasetSplit out;
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t pick = 3;
    double best = -1e300;
    for (std::size_t k = 0; k < 3; ++k) {
      if (out.sessions[k] >= target[k]) continue;
      const double deficit = static_cast<double>(target[k]) * static_cast<double>(i + 1) / static_cast<double>(total) -
                             static_cast<double>(out.sessions[k]);
      if (deficit > best) best = deficit, pick = k;
    }
    assignment[order[i]] = pick;
    ++out.sessions[pick];
  }
  for (const auto& t : dataset) {
    switch (assignment.at(t.session_id)) {
      case 0: out.train.push_back(t); break;
      case 1: out.validation.push_back(t); break;
      default: out.test.push_back(t); break;
    }
  }
  return out;
}

void to_json(nlohmann::json& j, const PrepConfig& c) {
  j = {{"rarity_threshold", c.rarity_threshold},
       {"upsample_factor", c.upsample_factor},
       {"ratios", {c.ratios.train, c.ratios.validation, c.ratios.test}},
       {"seed", c.seed},
       {"attach_aspects", c.attach_aspects}};
}

void from_json(const nlohmann::json& j, PrepConfig& c) {
  PrepConfig d;
  c.rarity_threshold = j.value("rarity_threshold", d.rarity_threshold);
  c.upsample_factor = j.value("upsample_factor", d.upsample_factor);
  if (j.contains("ratios")) {
    auto r = j.at("ratios").get<std::vector<double>>();
    if (r.size() != 3) throw ConfigError("ratios must list train, validation and test");
    c.ratios = {r[0], r[1], r[2]};
  }
  c.seed = j.value("seed", d.seed);
  c.attach_aspects = j.value("attach_aspects", d.attach_aspects);
}

nlohmann::json LintReport::to_json() const {
  return {{"sessions", sessions},
          {"utterances", utterances},
          {"empty_utterances", empty_utterances},
          {"empty_descriptions", empty_descriptions},
          {"unknown_scenario_operations", unknown_scenario_operations},
          {"length_outliers", length_outliers},
          {"mean_utterance_tokens", mean_utterance_tokens},
          {"examples", examples}};
}

LintReport lint(const std::vector<SessionLogRecord>& logs, const std::vector<CatalogEntry>& catalog) {
  LintReport report;
  const auto scenarios = index_catalog(catalog);
  auto note = [&](std::string finding) {
    if (report.examples.size() < kLintExamples) report.examples.push_back(std::move(finding));
  };
  for (const auto& e : catalog) {
    if (is_blank(e.description)) {
      ++report.empty_descriptions;
      note("scenario " + e.scenario_id + ": empty description");
    }
  }
  std::vector<std::pair<std::string, std::size_t>> lengths;
  for (const auto& s : logs) {
    ++report.sessions;
    for (std::size_t i = 0; i < s.utterances.size(); ++i) {
      ++report.utterances;
      const auto n = text::tokenize(s.utterances[i].text).size();
      if (n == 0) {
        ++report.empty_utterances;
        note("session " + s.id + " utterance " + std::to_string(i) + ": empty text");
      }
      lengths.emplace_back(s.id + " utterance " + std::to_string(i), n);
    }
    for (const auto& op : s.operations) {
      if (!scenarios.count(op.scenario_id)) {
        ++report.unknown_scenario_operations;
        note("session " + s.id + ": operation on unknown scenario " + op.scenario_id);
      }
    }
  }
  if (!lengths.empty()) {
    double sum = 0, sq = 0;
    for (const auto& [where, n] : lengths) sum += static_cast<double>(n);
    const double mean = sum / static_cast<double>(lengths.size());
    for (const auto& [where, n] : lengths) sq += (static_cast<double>(n) - mean) * (static_cast<double>(n) - mean);
    const double sd = std::sqrt(sq / static_cast<double>(lengths.size()));
    report.mean_utterance_tokens = mean;
    for (const auto& [where, n] : lengths) {
      if (sd > 0 && static_cast<double>(n) > mean + 3 * sd) {
        ++report.length_outliers;
        note(where + ": " + std::to_string(n) + " tokens");
      }
    }
  }
  return report;
}

nlohmann::json PreparedDataset::summary() const {
  return {{"organic_positives", organic_positives},
          {"augmented_positives", augmented_positives},
          {"negatives", negatives},
          {"train", split.train.size()},
          {"validation", split.validation.size()},
          {"test", split.test.size()},
          {"sessions", split.sessions},
          {"skipped_no_utterance", extraction.skipped_no_utterance},
          {"skipped_unknown_scenario", extraction.skipped_unknown_scenario},
          {"hovers_ignored", extraction.hovers_ignored},
          {"duplicates_merged", extraction.duplicates_merged},
          {"lint", lint.to_json()}};
}

PreparedDataset prepare_dataset(const std::vector<SessionLogRecord>& logs, const std::vector<CatalogEntry>& catalog,
                                const PrepConfig& config) {
  PreparedDataset out;
  out.lint = lint(logs, catalog);
  out.extraction = extract_positives(logs, catalog);
  auto& organic = out.extraction.positives;
  if (!config.attach_aspects) {
    for (auto& t : organic) t.aspects.reset();
  }
  auto positives = upsample_rare(organic, config.rarity_threshold, config.upsample_factor);
  nn::Rng seeds(config.seed);
  const auto negative_seed = seeds.next();
  const auto split_seed = seeds.next();
  auto negatives = sample_negatives(positives, organic, logs, catalog, negative_seed);
  if (!config.attach_aspects) {
    for (auto& t : negatives) t.aspects.reset();
  }
  out.organic_positives = organic.size();
  out.augmented_positives = positives.size();
  out.negatives = negatives.size();
  for (const auto& t : organic) ++out.organic_per_scenario[t.scenario_id];
  for (const auto& t : positives) ++out.augmented_per_scenario[t.scenario_id];

  std::vector<TrainingTriplet> dataset = std::move(positives);
  dataset.insert(dataset.end(), negatives.begin(), negatives.end());
  out.split = split(dataset, config.ratios, split_seed);
  return out;
}

}  // namespace ics::data
