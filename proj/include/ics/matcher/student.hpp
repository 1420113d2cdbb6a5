#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ics/matcher/config.hpp"
#include "ics/matcher/layers.hpp"
#include "ics/text/embeddings.hpp"

namespace ics::matcher {

struct ConvBank {
  std::size_t width = 0;
  nn::Tensor kernel;  // [width x d x d_o]
  nn::Tensor bias;    // [d_o]
};

// TextCNN sentence-pair matcher.
//
//   encode:   per width, conv1d -> ReLU -> masked max and mean over time;
//             u~ = [max_1..max_k, mean_1..mean_k]              (2 k d_o)
//   interact: x = [u~; s~; u~ * s~; (u~ - s~)^2], m = MLP(x)     (8 k d_o)
//   predict:  g = W m + b (a logit), y = sigmoid(g)
//
// Utterance and scenario text share the embedding table and the encoder.
// Copies share parameters; use clone() for an independent model.
class StudentModel {
 public:
  StudentModel(StudentConfig config, std::shared_ptr<const text::Vocabulary> vocab, nn::Rng& rng,
               const text::EmbeddingTable* pretrained = nullptr);

  const StudentConfig& config() const noexcept { return config_; }
  const text::Vocabulary& vocabulary() const noexcept { return *vocab_; }
  std::shared_ptr<const text::Vocabulary> shared_vocabulary() const noexcept { return vocab_; }

  TokenBatch batch(const std::vector<const std::vector<std::string>*>& texts) const;
  TokenBatch batch(const std::vector<std::string>& tokens) const;

  // [B x 2 k d_o]. Throws EmptySequenceError when a text has no tokens.
  nn::Tensor encode(const TokenBatch& tokens) const;
  // Matching feature m, [B x dim(m)].
  nn::Tensor interact(const nn::Tensor& u, const nn::Tensor& s, const ForwardOptions& opts) const;
  // x before the MLP, [B x 8 k d_o].
  static nn::Tensor interaction_input(const nn::Tensor& u, const nn::Tensor& s);
  nn::Tensor features(const TokenBatch& u, const TokenBatch& s, const ForwardOptions& opts) const;
  nn::Tensor logits(const TokenBatch& u, const TokenBatch& s, const ForwardOptions& opts) const;
  nn::Tensor predict(const TokenBatch& u, const TokenBatch& s, const ForwardOptions& opts) const;

  // Eval-mode probability for one pair.
  double predict(const std::vector<std::string>& u, const std::vector<std::string>& s) const;

  std::vector<nn::Parameter> parameters(const std::string& prefix = "", bool frozen = false) const;
  // Tensors subject to the L2 penalty: kernels and dense weights.
  std::vector<nn::Tensor> regularized() const;

  StudentModel clone() const;

  const nn::Tensor& embedding() const noexcept { return embedding_; }
  const std::vector<ConvBank>& convs() const noexcept { return convs_; }
  const Mlp& mlp() const noexcept { return mlp_; }
  const Dense& head() const noexcept { return head_; }

 private:
  StudentModel() = default;

  StudentConfig config_;
  std::shared_ptr<const text::Vocabulary> vocab_;
  nn::Tensor embedding_;
  std::vector<ConvBank> convs_;
  Mlp mlp_;
  Dense head_;
};

// Free-function spellings of the matcher operations.
nn::Tensor encode(const TokenBatch& tokens, const StudentModel& model);
double predict_student(const std::vector<std::string>& u, const std::vector<std::string>& s, const StudentModel& model);

}  // namespace ics::matcher
