#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ics::text {

// Smoothed inverse document frequency:
//   idf(w) = ln((1 + D) / (1 + df(w))) + 1
// Tokens never seen get the df = 0 value, the largest idf the model produces.
class TfIdfModel {
 public:
  TfIdfModel() = default;
  TfIdfModel(std::size_t documents, std::unordered_map<std::string, std::size_t> document_frequency);

  double idf(std::string_view token) const;
  std::size_t documents() const noexcept { return documents_; }
  std::size_t document_frequency(std::string_view token) const;

  // tf * idf per distinct token, tf = raw count of the token in `tokens`.
  std::map<std::string, double> weights(const std::vector<std::string>& tokens) const;

  void save(const std::filesystem::path& path) const;
  static TfIdfModel load(const std::filesystem::path& path);

 private:
  std::size_t documents_ = 0;
  std::unordered_map<std::string, std::size_t> df_;
};

// Each element of `corpus` is one tokenized document. Throws ConfigError on an
// empty corpus.
TfIdfModel fit_tfidf(const std::vector<std::vector<std::string>>& corpus);

}  // namespace ics::text
