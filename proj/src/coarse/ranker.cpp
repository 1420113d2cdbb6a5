#include "ics/coarse/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_set>

#include "ics/errors.hpp"
#include "ics/text/tokenizer.hpp"

namespace ics::coarse {
namespace {
std::uint64_t fnv_mix(std::uint64_t h, std::string_view bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  h ^= 0xff;
  h *= 0x100000001b3ull;
  return h;
}

bool ranks_before(const Candidate& a, const Candidate& b) {
  if (a.similarity != b.similarity) return a.similarity > b.similarity;
  return a.scenario_id < b.scenario_id;
}
}  // namespace

std::vector<double> weighted_average(std::span<const double> weights, std::span<const std::span<const double>> vectors,
                                     std::size_t dim) {
  if (weights.size() != vectors.size()) throw DimensionError("weighted_average: weight/vector count mismatch");
  std::vector<double> out(dim, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (vectors[i].size() != dim) throw DimensionError("weighted_average: vector dimension mismatch");
    total += weights[i];
    for (std::size_t c = 0; c < dim; ++c) out[c] += weights[i] * vectors[i][c];
  }
  if (total > 0.0) {
    for (auto& v : out) v /= total;
  }
  return out;
}

double cosine(const SentenceVector& u, const SentenceVector& s) {
  if (u.values.size() != s.values.size()) {
    throw DimensionError("cosine: dimensions " + std::to_string(u.values.size()) + " and " +
                         std::to_string(s.values.size()) + " differ");
  }
  double dot = 0.0, nu = 0.0, ns = 0.0;
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    dot += u.values[i] * s.values[i];
    nu += u.values[i] * u.values[i];
    ns += s.values[i] * s.values[i];
  }
  if (nu == 0.0 || ns == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(ns)), -1.0, 1.0);
}

CoarseRanker::CoarseRanker(std::shared_ptr<const text::EmbeddingTable> embeddings,
                           std::shared_ptr<const text::TfIdfModel> tfidf)
    : embeddings_(std::move(embeddings)), tfidf_(std::move(tfidf)) {
  if (!embeddings_ || !tfidf_) throw ConfigError("coarse ranker needs embeddings and a tf-idf model");
  fingerprint_ = embeddings_->vocabulary().hash() ^ (embeddings_->dim() * 0x9E3779B97F4A7C15ull);
  for (double v : embeddings_->data()) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    fingerprint_ = (fingerprint_ ^ bits) * 0x100000001b3ull;
  }
}

SentenceVector CoarseRanker::represent(std::string_view text, std::string source_id) const {
  return represent_tokens(text::tokenize(text), std::move(source_id));
}

SentenceVector CoarseRanker::represent_tokens(const std::vector<std::string>& tokens, std::string source_id) const {
  const auto& vocab = embeddings_->vocabulary();
  std::vector<double> weights;
  std::vector<std::span<const double>> vectors;
  for (const auto& [token, weight] : tfidf_->weights(tokens)) {
    const auto id = vocab.id(token);
    if (id < 2) continue;
    weights.push_back(weight);
    vectors.push_back(embeddings_->row(id));
  }
  SentenceVector out;
  out.source_id = std::move(source_id);
  out.no_known_tokens = weights.empty();
  out.values = weighted_average(weights, vectors, embeddings_->dim());
  return out;
}

ScenarioIndex ScenarioIndex::build(const CoarseRanker& ranker,
                                   const std::vector<std::pair<std::string, std::string>>& id_and_description) {
  ScenarioIndex index;
  std::unordered_set<std::string> seen;
  std::uint64_t version = ranker.fingerprint();
  for (const auto& [id, description] : id_and_description) {
    if (!seen.insert(id).second) throw DataError("duplicate scenario id '" + id + "' in catalog");
    index.entries_.push_back({id, description, ranker.represent(description, id)});
    version = fnv_mix(fnv_mix(version, id), description);
  }
  index.version_ = version;
  return index;
}

std::vector<Candidate> top_k(const SentenceVector& utterance, const ScenarioIndex& index, std::size_t k) {
  if (index.empty()) throw ConfigError("top_k: scenario index is empty");
  if (k == 0) throw ConfigError("top_k: K must be at least 1");
  std::vector<Candidate> all;
  all.reserve(index.size());
  for (const auto& e : index.entries()) all.push_back({e.id, cosine(utterance, e.vector)});
  const auto keep = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), ranks_before);
  all.resize(keep);
  return all;
}

std::vector<Candidate> top_k(std::string_view utterance, const CoarseRanker& ranker, const ScenarioIndex& index,
                             std::size_t k) {
  return top_k(ranker.represent(utterance), index, k);
}

}  // namespace ics::coarse
