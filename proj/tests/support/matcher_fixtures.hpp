#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ics/matcher/student.hpp"
#include "ics/numerics/rng.hpp"

namespace ics::testing {

inline std::vector<std::string> word_list(std::size_t n) {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < n; ++i) words.push_back("w" + std::to_string(i));
  return words;
}

inline std::shared_ptr<const text::Vocabulary> small_vocab(std::size_t n = 30) {
  return std::make_shared<const text::Vocabulary>(text::Vocabulary::build({word_list(n)}));
}

// Random sentence of [min_len, max_len] tokens, occasionally out-of-vocabulary.
inline std::vector<std::string> random_sentence(nn::Rng& rng, std::size_t min_len, std::size_t max_len,
                                                std::size_t vocab_words = 30) {
  const auto len = min_len + rng.index(max_len - min_len + 1);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < len; ++i) {
    out.push_back(rng.bernoulli(0.1) ? "oov" + std::to_string(i) : "w" + std::to_string(rng.index(vocab_words)));
  }
  return out;
}

// Overwrites every parameter with uniform noise, keeping the PAD embedding row
// at zero, so biases are exercised too.
inline void randomize(const std::vector<nn::Parameter>& params, nn::Rng& rng, double scale = 0.5) {
  for (const auto& p : params) {
    nn::Tensor t = p.tensor;
    auto v = t.mutable_values();
    const bool is_embedding = p.name.size() >= 9 && p.name.compare(p.name.size() - 9, 9, "embedding") == 0;
    const std::size_t skip = is_embedding ? t.cols() : 0;
    for (std::size_t i = skip; i < v.size(); ++i) v[i] = rng.uniform(-scale, scale);
  }
}

inline matcher::StudentConfig tiny_config() {
  matcher::StudentConfig c;
  c.kernel_widths = {2, 3};
  c.channels = 4;
  c.seq_len = 8;
  c.embed_dim = 6;
  c.mlp_hidden = {10, 6};
  return c;
}

}  // namespace ics::testing
