#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ics::text {

using TokenId = std::int32_t;

// Dense token <-> id map. Id 0 is PAD, id 1 is UNK; lookups never fail.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();

  // Tokens with count >= min_count, ordered by descending frequency then
  // lexicographically.
  static Vocabulary build(const std::vector<std::vector<std::string>>& corpus, std::size_t min_count = 1);

  // Appends a token if absent; returns its id either way.
  TokenId add(std::string_view token, std::size_t count = 0);

  TokenId id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;
  std::size_t count(TokenId id) const { return counts_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  std::vector<TokenId> ids(const std::vector<std::string>& tokens) const;

  // FNV-1a over the tokens in id order; identifies the id assignment.
  std::uint64_t hash() const;

  // One "token<TAB>count" line per id, reserved ids included.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  std::vector<std::string> tokens_;
  std::vector<std::size_t> counts_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace ics::text
