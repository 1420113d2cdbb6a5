#include "ics/text/skipgram.hpp"

#include <cmath>

#include "ics/errors.hpp"
#include "ics/numerics/rng.hpp"

namespace ics::text {
namespace {
double sigmoid(double x) {
  if (x > 30) return 1.0;
  if (x < -30) return 0.0;
  return 1.0 / (1.0 + std::exp(-x));
}
}  // namespace

EmbeddingTable train_skipgram(const std::vector<std::vector<std::string>>& corpus, const SkipGramOptions& options) {
  if (options.dim < 2) throw ConfigError("skip-gram dimension must be at least 2");
  if (options.window == 0) throw ConfigError("skip-gram window must be at least 1");
  auto vocab = Vocabulary::build(corpus, options.min_count);
  const auto v = vocab.size(), d = options.dim;
  if (v <= 2) throw ConfigError("skip-gram corpus has no tokens");

  nn::Rng rng(options.seed);
  std::vector<double> input(v * d, 0.0), output(v * d, 0.0);
  for (std::size_t id = 2; id < v; ++id) {
    for (std::size_t c = 0; c < d; ++c) input[id * d + c] = rng.uniform(-0.5, 0.5) / static_cast<double>(d);
  }

  // Unigram^0.75 noise table over real tokens.
  std::vector<std::size_t> noise;
  {
    double total = 0.0;
    for (std::size_t id = 2; id < v; ++id) total += std::pow(static_cast<double>(vocab.count(static_cast<TokenId>(id))), 0.75);
    const std::size_t table_size = std::max<std::size_t>(1000, 20 * v);
    for (std::size_t id = 2; id < v; ++id) {
      const double share = std::pow(static_cast<double>(vocab.count(static_cast<TokenId>(id))), 0.75) / total;
      const auto slots = std::max<std::size_t>(1, static_cast<std::size_t>(share * static_cast<double>(table_size)));
      noise.insert(noise.end(), slots, id);
    }
  }

  std::vector<std::vector<TokenId>> sentences;
  std::size_t total_tokens = 0;
  for (const auto& doc : corpus) {
    std::vector<TokenId> ids;
    for (const auto& t : doc) {
      if (auto id = vocab.id(t); id >= 2) ids.push_back(id);
    }
    total_tokens += ids.size();
    if (ids.size() >= 2) sentences.push_back(std::move(ids));
  }

  const double total_work = static_cast<double>(options.epochs * std::max<std::size_t>(total_tokens, 1));
  double processed = 0.0;
  std::vector<double> update(d);
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    for (const auto& sentence : sentences) {
      for (std::size_t pos = 0; pos < sentence.size(); ++pos) {
        const double lr = std::max(options.learning_rate * (1.0 - processed / total_work), options.learning_rate * 1e-4);
        processed += 1.0;
        const auto center = static_cast<std::size_t>(sentence[pos]);
        const auto lo = pos >= options.window ? pos - options.window : 0;
        const auto hi = std::min(sentence.size() - 1, pos + options.window);
        for (std::size_t ctx = lo; ctx <= hi; ++ctx) {
          if (ctx == pos) continue;
          const auto target = static_cast<std::size_t>(sentence[ctx]);
          double* in = input.data() + center * d;
          std::fill(update.begin(), update.end(), 0.0);
          for (std::size_t s = 0; s <= options.negatives; ++s) {
            std::size_t word = target;
            double label = 1.0;
            if (s > 0) {
              word = noise[rng.index(noise.size())];
              if (word == target) continue;
              label = 0.0;
            }
            double* out = output.data() + word * d;
            double dot = 0.0;
            for (std::size_t c = 0; c < d; ++c) dot += in[c] * out[c];
            const double g = (label - sigmoid(dot)) * lr;
            for (std::size_t c = 0; c < d; ++c) {
              update[c] += g * out[c];
              out[c] += g * in[c];
            }
          }
          for (std::size_t c = 0; c < d; ++c) in[c] += update[c];
        }
      }
    }
  }
  return EmbeddingTable(std::move(vocab), d, std::move(input));
}

}  // namespace ics::text
