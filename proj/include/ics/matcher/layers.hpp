#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ics/numerics/adam.hpp"
#include "ics/numerics/rng.hpp"
#include "ics/numerics/tensor.hpp"
#include "ics/text/vocabulary.hpp"

namespace ics::matcher {

struct ForwardOptions {
  bool training = false;
  nn::Rng* rng = nullptr;  // required when training with dropout > 0
};

// y = x W + b with W stored [in x out].
struct Dense {
  nn::Tensor weight;
  nn::Tensor bias;

  static Dense glorot(std::size_t in, std::size_t out, nn::Rng& rng);
  static Dense zeros(std::size_t in, std::size_t out);
  std::size_t in_dim() const { return weight.shape()[0]; }
  std::size_t out_dim() const { return weight.shape()[1]; }
  nn::Tensor forward(const nn::Tensor& x) const;
  Dense clone() const { return {weight.clone(), bias.clone()}; }
};

// Stack of ReLU layers, each followed by dropout in training mode.
struct Mlp {
  std::vector<Dense> layers;

  static Mlp build(std::size_t in, const std::vector<std::size_t>& hidden, nn::Rng& rng);
  nn::Tensor forward(const nn::Tensor& x, double dropout, const ForwardOptions& opts) const;
  std::size_t out_dim() const { return layers.back().out_dim(); }
  Mlp clone() const;
  void append_parameters(const std::string& prefix, bool frozen, std::vector<nn::Parameter>& out) const;
};

// Padded token ids for a batch of texts, `seq_len` positions each.
struct TokenBatch {
  std::vector<text::TokenId> ids;
  std::vector<std::uint8_t> mask;
  std::size_t batch = 0;
  std::size_t seq_len = 0;
};

TokenBatch make_batch(const text::Vocabulary& vocab, const std::vector<const std::vector<std::string>*>& texts,
                      std::size_t seq_len);
TokenBatch make_batch(const text::Vocabulary& vocab, const std::vector<std::string>& tokens, std::size_t seq_len);

}  // namespace ics::matcher
