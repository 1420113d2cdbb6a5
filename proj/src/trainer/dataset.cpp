#include "ics/trainer/dataset.hpp"

#include <algorithm>

#include "ics/text/tokenizer.hpp"

namespace ics::trainer {

bool Dataset::has_aspects() const {
  return std::any_of(examples.begin(), examples.end(), [](const Example& e) { return e.aspects.has_value(); });
}

std::vector<double> Dataset::labels() const {
  std::vector<double> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back(e.label);
  return out;
}

Dataset make_dataset(const std::vector<data::TrainingTriplet>& triplets, const matcher::AspectSchema* schema) {
  Dataset out;
  out.examples.reserve(triplets.size());
  for (const auto& t : triplets) {
    Example e;
    e.u = text::tokenize(t.u);
    e.s = text::tokenize(t.s);
    if (e.u.empty() || e.s.empty()) {
      ++out.skipped_empty;
      continue;
    }
    e.label = t.y;
    e.scenario_id = t.scenario_id;
    if (schema && t.aspects) e.aspects = schema->encode(*t.aspects);
    out.examples.push_back(std::move(e));
  }
  return out;
}

PairBatch gather(const Dataset& data, const std::vector<std::size_t>& indices, std::size_t begin, std::size_t end) {
  PairBatch b;
  bool all_aspects = true;
  for (auto i = begin; i < end; ++i) {
    const auto& e = data.examples[indices[i]];
    b.u.push_back(&e.u);
    b.s.push_back(&e.s);
    b.labels.push_back(e.label);
    if (e.aspects) b.aspects.push_back(&*e.aspects);
    else all_aspects = false;
  }
  if (!all_aspects) b.aspects.clear();
  return b;
}

}  // namespace ics::trainer
