#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ics/text/embeddings.hpp"

namespace ics::text {

struct SkipGramOptions {
  std::size_t dim = 64;
  std::size_t epochs = 5;
  std::size_t window = 3;
  std::size_t negatives = 5;
  double learning_rate = 0.025;
  std::size_t min_count = 1;
  std::uint64_t seed = 1;
};

// Skip-gram with negative sampling over a tokenized corpus. Deterministic for
// a given seed; PAD and UNK rows stay zero.
EmbeddingTable train_skipgram(const std::vector<std::vector<std::string>>& corpus, const SkipGramOptions& options);

}  // namespace ics::text
