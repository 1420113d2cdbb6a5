#pragma once

#include <string>
#include <vector>

#include "ics/matcher/aspects.hpp"
#include "ics/matcher/student.hpp"

namespace ics::matcher {

// Student text features m fused with aspect features m-bar:
//   m-bar = DNN(aspects), g = MLP([m; m-bar]), y = sigmoid(g).
class HybridModel {
 public:
  // Takes an independent copy of `student`.
  HybridModel(const StudentModel& student, AspectSchema schema, HybridConfig config, nn::Rng& rng);

  const StudentModel& student() const noexcept { return student_; }
  const AspectSchema& schema() const noexcept { return schema_; }
  const HybridConfig& config() const noexcept { return config_; }

  // When frozen, student parameters are reported frozen and receive no
  // gradient.
  void set_student_frozen(bool frozen);
  bool student_frozen() const noexcept { return student_frozen_; }

  // [B x L] aspect matrix from encoded vectors; throws on a length mismatch.
  nn::Tensor aspect_matrix(const std::vector<const AspectFeatureVector*>& aspects) const;

  nn::Tensor aspect_features(const nn::Tensor& aspects, const ForwardOptions& opts) const;
  nn::Tensor fuse(const nn::Tensor& text_features, const nn::Tensor& aspect_features, const ForwardOptions& opts) const;
  nn::Tensor logits(const TokenBatch& u, const TokenBatch& s, const nn::Tensor& aspects,
                    const ForwardOptions& opts) const;
  nn::Tensor predict(const TokenBatch& u, const TokenBatch& s, const nn::Tensor& aspects,
                     const ForwardOptions& opts) const;

  double predict(const std::vector<std::string>& u, const std::vector<std::string>& s,
                 const AspectFeatureVector& aspects) const;

  std::vector<nn::Parameter> parameters() const;
  std::vector<nn::Parameter> student_parameters() const;
  std::vector<nn::Tensor> regularized() const;

  const Mlp& aspect_dnn() const noexcept { return aspect_dnn_; }
  const Mlp& fusion() const noexcept { return fusion_; }
  const Dense& head() const noexcept { return head_; }

 private:
  StudentModel student_;
  AspectSchema schema_;
  HybridConfig config_;
  Mlp aspect_dnn_;
  Mlp fusion_;
  Dense head_;
  bool student_frozen_ = false;
};

double predict_hybrid(const std::vector<std::string>& u, const std::vector<std::string>& s,
                      const AspectFeatureVector& aspects, const HybridModel& model);

}  // namespace ics::matcher
