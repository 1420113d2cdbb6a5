#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ics/data_prep/records.hpp"
#include "ics/matcher/aspects.hpp"
#include "ics/matcher/layers.hpp"

namespace ics::trainer {

// A tokenized training pair.
struct Example {
  std::vector<std::string> u;
  std::vector<std::string> s;
  double label = 0.0;
  std::optional<matcher::AspectFeatureVector> aspects;
  std::string scenario_id;
};

struct Dataset {
  std::vector<Example> examples;
  std::size_t skipped_empty = 0;  // pairs dropped because a side had no tokens

  std::size_t size() const noexcept { return examples.size(); }
  bool empty() const noexcept { return examples.empty(); }
  bool has_aspects() const;
  std::vector<double> labels() const;
};

// Tokenizes both sides; encodes aspects through `schema` when given. Pairs
// whose utterance or description has no tokens are skipped and counted.
Dataset make_dataset(const std::vector<data::TrainingTriplet>& triplets, const matcher::AspectSchema* schema = nullptr);

// Pointers to the token lists of the selected examples, ready for batching.
struct PairBatch {
  std::vector<const std::vector<std::string>*> u;
  std::vector<const std::vector<std::string>*> s;
  std::vector<double> labels;
  std::vector<const matcher::AspectFeatureVector*> aspects;  // filled when every example has aspects
};

PairBatch gather(const Dataset& data, const std::vector<std::size_t>& indices, std::size_t begin, std::size_t end);

}  // namespace ics::trainer
