#pragma once

#include <span>
#include <string>
#include <vector>

#include "ics/matcher/hybrid.hpp"
#include "ics/matcher/student.hpp"

namespace ics::matcher {

// Eval-mode scorer for one utterance against many catalog scenarios.
//
// Scenario encodings s~ and their contribution to the first interaction
// layer are computed once at construction, so a query costs one utterance
// encoding plus the per-candidate product and difference blocks.
// The model must outlive the scorer and stay unmodified.
class CatalogScorer {
 public:
  CatalogScorer(const StudentModel& model, const std::vector<std::vector<std::string>>& scenario_tokens);

  std::size_t size() const noexcept { return scenario_count_; }

  // Student probabilities for the given scenario indices.
  std::vector<double> score(const std::vector<std::string>& utterance, std::span<const std::size_t> candidates) const;

  // Hybrid probabilities; `hybrid.student()` must be the model this scorer
  // was built from.
  std::vector<double> score_hybrid(const HybridModel& hybrid, const std::vector<std::string>& utterance,
                                   std::span<const std::size_t> candidates, const AspectFeatureVector& aspects) const;

 private:
  nn::Tensor text_features(const std::vector<std::string>& utterance, std::span<const std::size_t> candidates) const;

  const StudentModel* model_;
  std::size_t scenario_count_ = 0;
  std::size_t encoding_dim_ = 0;
  std::vector<double> scenario_encodings_;  // [C x E]
  std::vector<double> scenario_partial_;    // [C x h1]: s~ W1[s-block]
  // Row blocks of the first MLP weight matrix.
  nn::Tensor w_u_, w_prod_diff_;
};

}  // namespace ics::matcher
