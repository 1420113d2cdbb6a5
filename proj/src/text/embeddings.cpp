#include "ics/text/embeddings.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ics/errors.hpp"

namespace ics::text {

EmbeddingTable::EmbeddingTable(Vocabulary vocab, std::size_t dim)
    : vocab_(std::move(vocab)), dim_(dim), data_(vocab_.size() * dim, 0.0) {
  if (dim == 0) throw ConfigError("embedding dimension must be positive");
}

EmbeddingTable::EmbeddingTable(Vocabulary vocab, std::size_t dim, std::vector<double> data)
    : vocab_(std::move(vocab)), dim_(dim), data_(std::move(data)) {
  if (dim == 0) throw ConfigError("embedding dimension must be positive");
  if (data_.size() != vocab_.size() * dim_) {
    throw DimensionError("embedding table needs " + std::to_string(vocab_.size() * dim_) + " values, got " +
                         std::to_string(data_.size()));
  }
  std::fill_n(data_.begin(), dim_, 0.0);
}

std::span<const double> EmbeddingTable::row(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= rows()) throw DimensionError("embedding row out of range");
  return std::span<const double>(data_).subspan(static_cast<std::size_t>(id) * dim_, dim_);
}

std::span<double> EmbeddingTable::mutable_row(TokenId id) {
  if (id < 0 || static_cast<std::size_t>(id) >= rows()) throw DimensionError("embedding row out of range");
  return std::span<double>(data_).subspan(static_cast<std::size_t>(id) * dim_, dim_);
}

void EmbeddingTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write word vectors to " + path.string());
  out << rows() - 2 << ' ' << dim_ << '\n';
  char buf[32];
  for (std::size_t id = 2; id < rows(); ++id) {
    out << vocab_.token(static_cast<TokenId>(id));
    for (double v : row(static_cast<TokenId>(id))) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ' ' << buf;
    }
    out << '\n';
  }
}

nn::Tensor EmbeddingTable::aligned_to(const Vocabulary& target, nn::Rng& rng, double init_scale) const {
  std::vector<double> values(target.size() * dim_, 0.0);
  for (std::size_t id = 1; id < target.size(); ++id) {
    const auto& token = target.token(static_cast<TokenId>(id));
    const auto own = vocab_.contains(token) ? vocab_.id(token) : Vocabulary::kUnk;
    auto dst = values.begin() + static_cast<std::ptrdiff_t>(id * dim_);
    if (own >= 2) {
      auto src = row(own);
      std::copy(src.begin(), src.end(), dst);
    } else {
      for (std::size_t c = 0; c < dim_; ++c) dst[static_cast<std::ptrdiff_t>(c)] = rng.uniform(-init_scale, init_scale);
    }
  }
  return nn::Tensor::parameter({target.size(), dim_}, std::move(values));
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read word vectors from " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError("word-vector file is empty", 1);
  std::size_t count = 0, dim = 0;
  {
    std::istringstream header(line);
    if (!(header >> count >> dim) || dim == 0) throw ParseError("header must be '<count> <dim>'", 1);
    std::string extra;
    if (header >> extra) throw ParseError("header must be '<count> <dim>'", 1);
  }
  Vocabulary vocab;
  std::vector<double> data(2 * dim, 0.0);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    if (token.empty()) throw ParseError("missing token", line_no);
    if (vocab.contains(token)) throw ParseError("duplicate token '" + token + "'", line_no);
    std::vector<double> row;
    std::string field;
    while (fields >> field) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw ParseError("malformed value '" + field + "'", line_no);
      }
      row.push_back(v);
    }
    if (row.size() != dim) {
      throw ParseError("expected " + std::to_string(dim) + " values, got " + std::to_string(row.size()), line_no);
    }
    vocab.add(token, 0);
    data.insert(data.end(), row.begin(), row.end());
  }
  if (vocab.size() - 2 != count) {
    throw ParseError("header declares " + std::to_string(count) + " vectors but file has " +
                     std::to_string(vocab.size() - 2));
  }
  return EmbeddingTable(std::move(vocab), dim, std::move(data));
}

IndexedSequence index_sequence(const Vocabulary& vocab, const std::vector<std::string>& tokens, std::size_t n) {
  if (n == 0) throw ConfigError("sequence length must be at least 1");
  IndexedSequence seq;
  seq.ids.assign(n, Vocabulary::kPad);
  seq.mask.assign(n, 0);
  const auto len = std::min(n, tokens.size());
  for (std::size_t i = 0; i < len; ++i) {
    seq.ids[i] = vocab.id(tokens[i]);
    seq.mask[i] = 1;
  }
  seq.empty = len == 0;
  return seq;
}

EmbeddedSequence embed_sequence(const EmbeddingTable& table, const std::vector<std::string>& tokens, std::size_t n) {
  auto indexed = index_sequence(table.vocabulary(), tokens, n);
  std::vector<double> values(n * table.dim(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto src = table.row(indexed.ids[i]);
    std::copy(src.begin(), src.end(), values.begin() + static_cast<std::ptrdiff_t>(i * table.dim()));
  }
  return {nn::Tensor({n, table.dim()}, std::move(values)), std::move(indexed.mask), indexed.empty};
}

}  // namespace ics::text
