#include "ics/matcher/layers.hpp"

#include <cmath>

#include "ics/errors.hpp"
#include "ics/numerics/ops.hpp"
#include "ics/text/embeddings.hpp"

namespace ics::matcher {

Dense Dense::glorot(std::size_t in, std::size_t out, nn::Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::vector<double> w(in * out);
  for (auto& x : w) x = rng.uniform(-limit, limit);
  return {nn::Tensor::parameter({in, out}, std::move(w)), nn::Tensor::parameter({out}, std::vector<double>(out, 0.0))};
}

Dense Dense::zeros(std::size_t in, std::size_t out) {
  return {nn::Tensor::parameter({in, out}, std::vector<double>(in * out, 0.0)),
          nn::Tensor::parameter({out}, std::vector<double>(out, 0.0))};
}

nn::Tensor Dense::forward(const nn::Tensor& x) const { return nn::add_bias(nn::matmul(x, weight), bias); }

Mlp Mlp::build(std::size_t in, const std::vector<std::size_t>& hidden, nn::Rng& rng) {
  Mlp mlp;
  for (auto h : hidden) {
    mlp.layers.push_back(Dense::glorot(in, h, rng));
    in = h;
  }
  return mlp;
}

nn::Tensor Mlp::forward(const nn::Tensor& x, double dropout, const ForwardOptions& opts) const {
  nn::Tensor h = x;
  for (const auto& layer : layers) {
    h = nn::relu(layer.forward(h));
    if (opts.training && dropout > 0.0) {
      if (!opts.rng) throw ConfigError("training-mode dropout needs a random generator");
      h = nn::dropout(h, dropout, *opts.rng, true);
    }
  }
  return h;
}

Mlp Mlp::clone() const {
  Mlp out;
  for (const auto& l : layers) out.layers.push_back(l.clone());
  return out;
}

void Mlp::append_parameters(const std::string& prefix, bool frozen, std::vector<nn::Parameter>& out) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    out.push_back({prefix + std::to_string(i) + ".weight", layers[i].weight, frozen});
    out.push_back({prefix + std::to_string(i) + ".bias", layers[i].bias, frozen});
  }
}

TokenBatch make_batch(const text::Vocabulary& vocab, const std::vector<const std::vector<std::string>*>& texts,
                      std::size_t seq_len) {
  TokenBatch batch;
  batch.batch = texts.size();
  batch.seq_len = seq_len;
  batch.ids.reserve(texts.size() * seq_len);
  batch.mask.reserve(texts.size() * seq_len);
  for (const auto* tokens : texts) {
    auto seq = text::index_sequence(vocab, *tokens, seq_len);
    batch.ids.insert(batch.ids.end(), seq.ids.begin(), seq.ids.end());
    batch.mask.insert(batch.mask.end(), seq.mask.begin(), seq.mask.end());
  }
  return batch;
}

TokenBatch make_batch(const text::Vocabulary& vocab, const std::vector<std::string>& tokens, std::size_t seq_len) {
  return make_batch(vocab, std::vector<const std::vector<std::string>*>{&tokens}, seq_len);
}

}  // namespace ics::matcher
