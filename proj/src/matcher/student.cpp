#include "ics/matcher/student.hpp"

#include <cmath>

#include "ics/errors.hpp"
#include "ics/numerics/ops.hpp"
#include "ics/numerics/tape.hpp"

namespace ics::matcher {
namespace {
constexpr double kEmbeddingInitScale = 0.1;
}

StudentModel::StudentModel(StudentConfig config, std::shared_ptr<const text::Vocabulary> vocab, nn::Rng& rng,
                           const text::EmbeddingTable* pretrained)
    : config_(std::move(config)), vocab_(std::move(vocab)) {
  config_.validate();
  if (!vocab_) throw ConfigError("student model needs a vocabulary");
  const auto d = config_.embed_dim;
  if (pretrained) {
    if (pretrained->dim() != d) {
      throw ConfigError("pretrained embeddings have dimension " + std::to_string(pretrained->dim()) +
                        ", model expects " + std::to_string(d));
    }
    embedding_ = pretrained->aligned_to(*vocab_, rng, kEmbeddingInitScale);
  } else {
    std::vector<double> values(vocab_->size() * d, 0.0);
    for (std::size_t i = d; i < values.size(); ++i) values[i] = rng.uniform(-kEmbeddingInitScale, kEmbeddingInitScale);
    embedding_ = nn::Tensor::parameter({vocab_->size(), d}, std::move(values));
  }

  const auto d_o = config_.channels;
  for (auto w : config_.kernel_widths) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w * d + d_o));
    std::vector<double> k(w * d * d_o);
    for (auto& x : k) x = rng.uniform(-limit, limit);
    convs_.push_back({w, nn::Tensor::parameter({w, d, d_o}, std::move(k)),
                      nn::Tensor::parameter({d_o}, std::vector<double>(d_o, 0.0))});
  }
  mlp_ = Mlp::build(config_.interaction_dim(), config_.mlp_hidden, rng);
  head_ = Dense::glorot(config_.feature_dim(), 1, rng);
}

TokenBatch StudentModel::batch(const std::vector<const std::vector<std::string>*>& texts) const {
  return make_batch(*vocab_, texts, config_.seq_len);
}

TokenBatch StudentModel::batch(const std::vector<std::string>& tokens) const {
  return make_batch(*vocab_, tokens, config_.seq_len);
}

nn::Tensor StudentModel::encode(const TokenBatch& tokens) const {
  if (tokens.seq_len != config_.seq_len) {
    throw DimensionError("token batch has sequence length " + std::to_string(tokens.seq_len) + ", model expects " +
                         std::to_string(config_.seq_len));
  }
  auto embedded = nn::embedding_lookup(embedding_, tokens.ids, text::Vocabulary::kPad);
  std::vector<nn::Tensor> maxes, means;
  for (const auto& conv : convs_) {
    auto feature_map = nn::relu(nn::conv1d(embedded, conv.kernel, conv.bias, tokens.seq_len));
    maxes.push_back(nn::max_over_time(feature_map, tokens.mask, tokens.seq_len));
    means.push_back(nn::mean_over_time(feature_map, tokens.mask, tokens.seq_len));
  }
  maxes.insert(maxes.end(), means.begin(), means.end());
  return nn::concat(maxes, 1);
}

nn::Tensor StudentModel::interaction_input(const nn::Tensor& u, const nn::Tensor& s) {
  if (u.shape() != s.shape()) {
    throw DimensionError("interact: encodings differ in shape, " + nn::shape_string(u.shape()) + " vs " +
                         nn::shape_string(s.shape()));
  }
  std::vector<nn::Tensor> blocks{u, s, nn::mul(u, s), nn::square(nn::sub(u, s))};
  return nn::concat(blocks, 1);
}

nn::Tensor StudentModel::interact(const nn::Tensor& u, const nn::Tensor& s, const ForwardOptions& opts) const {
  if (u.cols() != config_.encoding_dim()) {
    throw DimensionError("interact: encoding width " + std::to_string(u.cols()) + ", model expects " +
                         std::to_string(config_.encoding_dim()));
  }
  return mlp_.forward(interaction_input(u, s), config_.dropout, opts);
}

nn::Tensor StudentModel::features(const TokenBatch& u, const TokenBatch& s, const ForwardOptions& opts) const {
  if (u.batch != s.batch) {
    throw DimensionError("utterance batch of " + std::to_string(u.batch) + " paired with scenario batch of " +
                         std::to_string(s.batch));
  }
  return interact(encode(u), encode(s), opts);
}

nn::Tensor StudentModel::logits(const TokenBatch& u, const TokenBatch& s, const ForwardOptions& opts) const {
  return head_.forward(features(u, s, opts));
}

nn::Tensor StudentModel::predict(const TokenBatch& u, const TokenBatch& s, const ForwardOptions& opts) const {
  return nn::sigmoid(logits(u, s, opts));
}

double StudentModel::predict(const std::vector<std::string>& u, const std::vector<std::string>& s) const {
  nn::NoGradGuard no_grad;
  return predict(batch(u), batch(s), ForwardOptions{}).item();
}

std::vector<nn::Parameter> StudentModel::parameters(const std::string& prefix, bool frozen) const {
  std::vector<nn::Parameter> out;
  out.push_back({prefix + "embedding", embedding_, frozen});
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    out.push_back({prefix + "conv" + std::to_string(i) + ".kernel", convs_[i].kernel, frozen});
    out.push_back({prefix + "conv" + std::to_string(i) + ".bias", convs_[i].bias, frozen});
  }
  mlp_.append_parameters(prefix + "mlp", frozen, out);
  out.push_back({prefix + "head.weight", head_.weight, frozen});
  out.push_back({prefix + "head.bias", head_.bias, frozen});
  return out;
}

std::vector<nn::Tensor> StudentModel::regularized() const {
  std::vector<nn::Tensor> out;
  for (const auto& c : convs_) out.push_back(c.kernel);
  for (const auto& l : mlp_.layers) out.push_back(l.weight);
  out.push_back(head_.weight);
  return out;
}

StudentModel StudentModel::clone() const {
  StudentModel copy;
  copy.config_ = config_;
  copy.vocab_ = vocab_;
  copy.embedding_ = embedding_.clone();
  for (const auto& c : convs_) copy.convs_.push_back({c.width, c.kernel.clone(), c.bias.clone()});
  copy.mlp_ = mlp_.clone();
  copy.head_ = head_.clone();
  return copy;
}

nn::Tensor encode(const TokenBatch& tokens, const StudentModel& model) { return model.encode(tokens); }

double predict_student(const std::vector<std::string>& u, const std::vector<std::string>& s,
                       const StudentModel& model) {
  return model.predict(u, s);
}

}  // namespace ics::matcher
