#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ics/numerics/rng.hpp"
#include "ics/numerics/tensor.hpp"
#include "ics/text/vocabulary.hpp"

namespace ics::text {

// Word vectors aligned with their own vocabulary. The PAD row is all zeros.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(Vocabulary vocab, std::size_t dim);
  EmbeddingTable(Vocabulary vocab, std::size_t dim, std::vector<double> data);

  const Vocabulary& vocabulary() const noexcept { return vocab_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t rows() const noexcept { return vocab_.size(); }
  std::span<const double> row(TokenId id) const;
  std::span<double> mutable_row(TokenId id);
  std::span<const double> data() const noexcept { return data_; }

  // Standard textual word-vector format: "V dim" header, then one
  // "token v1 ... v_dim" line per non-reserved token.
  void save(const std::filesystem::path& path) const;

  // Matrix for `target` ids: rows copied where this table knows the token,
  // small uniform noise otherwise, PAD row zero.
  nn::Tensor aligned_to(const Vocabulary& target, nn::Rng& rng, double init_scale) const;

 private:
  Vocabulary vocab_;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

// Throws ParseError with the offending line number on malformed input.
EmbeddingTable load_embeddings(const std::filesystem::path& path);

struct IndexedSequence {
  std::vector<TokenId> ids;         // length N, PAD-filled
  std::vector<std::uint8_t> mask;   // 1 for real positions
  bool empty = false;               // true when no real position exists
};

// Truncates to N or right-pads with PAD.
IndexedSequence index_sequence(const Vocabulary& vocab, const std::vector<std::string>& tokens, std::size_t n);

struct EmbeddedSequence {
  nn::Tensor values;  // [N x d]
  std::vector<std::uint8_t> mask;
  bool empty = false;
};

EmbeddedSequence embed_sequence(const EmbeddingTable& table, const std::vector<std::string>& tokens, std::size_t n);

}  // namespace ics::text
