#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ics/text/embeddings.hpp"
#include "ics/text/tfidf.hpp"

// Stage-1 retrieval: tf-idf weighted average of word vectors, cosine top-K.
namespace ics::coarse {

struct SentenceVector {
  std::vector<double> values;
  std::string source_id;
  // Set when the text had no token known to the embedding table; values are
  // then all zero.
  bool no_known_tokens = false;
};

// sum_i w_i * v_i / sum_i w_i; zero vector when there is nothing to average.
std::vector<double> weighted_average(std::span<const double> weights, std::span<const std::span<const double>> vectors,
                                     std::size_t dim);

// dot / (|u||s|); 0 when either vector is zero. Throws DimensionError on
// mismatched dimensions.
double cosine(const SentenceVector& u, const SentenceVector& s);

class CoarseRanker {
 public:
  CoarseRanker(std::shared_ptr<const text::EmbeddingTable> embeddings, std::shared_ptr<const text::TfIdfModel> tfidf);

  // Tokens unknown to the embedding table are dropped from the average.
  SentenceVector represent(std::string_view text, std::string source_id = {}) const;
  SentenceVector represent_tokens(const std::vector<std::string>& tokens, std::string source_id = {}) const;

  std::size_t dim() const noexcept { return embeddings_->dim(); }
  std::uint64_t fingerprint() const noexcept { return fingerprint_; }

 private:
  std::shared_ptr<const text::EmbeddingTable> embeddings_;
  std::shared_ptr<const text::TfIdfModel> tfidf_;
  std::uint64_t fingerprint_;
};

struct ScenarioEntry {
  std::string id;
  std::string description;
  SentenceVector vector;
};

// Immutable snapshot of the catalog representations. Rebuild on any catalog
// or embedding change; version() changes with either.
class ScenarioIndex {
 public:
  ScenarioIndex() = default;
  static ScenarioIndex build(const CoarseRanker& ranker,
                             const std::vector<std::pair<std::string, std::string>>& id_and_description);

  const std::vector<ScenarioEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::uint64_t version() const noexcept { return version_; }

 private:
  std::vector<ScenarioEntry> entries_;
  std::uint64_t version_ = 0;
};

struct Candidate {
  std::string scenario_id;
  double similarity = 0.0;
};

// K most similar scenarios, descending, ties by ascending id. Returns the
// whole catalog (sorted) when K exceeds it. Throws on an empty index or K = 0.
std::vector<Candidate> top_k(const SentenceVector& utterance, const ScenarioIndex& index, std::size_t k);
std::vector<Candidate> top_k(std::string_view utterance, const CoarseRanker& ranker, const ScenarioIndex& index,
                             std::size_t k);

}  // namespace ics::coarse
