#include "ics/text/tfidf.hpp"

#include <cmath>
#include <set>

#include <nlohmann/json.hpp>
#include <fstream>

#include "ics/errors.hpp"

namespace ics::text {

TfIdfModel::TfIdfModel(std::size_t documents, std::unordered_map<std::string, std::size_t> document_frequency)
    : documents_(documents), df_(std::move(document_frequency)) {}

std::size_t TfIdfModel::document_frequency(std::string_view token) const {
  auto it = df_.find(std::string(token));
  return it == df_.end() ? 0 : it->second;
}

double TfIdfModel::idf(std::string_view token) const {
  const double d = static_cast<double>(documents_);
  const double df = static_cast<double>(document_frequency(token));
  return std::log((1.0 + d) / (1.0 + df)) + 1.0;
}

std::map<std::string, double> TfIdfModel::weights(const std::vector<std::string>& tokens) const {
  std::map<std::string, double> tf;
  for (const auto& t : tokens) tf[t] += 1.0;
  for (auto& [token, w] : tf) w *= idf(token);
  return tf;
}

void TfIdfModel::save(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["documents"] = documents_;
  j["document_frequency"] = df_;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write tf-idf model to " + path.string());
  out << j.dump() << '\n';
}

TfIdfModel TfIdfModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read tf-idf model from " + path.string());
  try {
    auto j = nlohmann::json::parse(in);
    return TfIdfModel(j.at("documents").get<std::size_t>(),
                      j.at("document_frequency").get<std::unordered_map<std::string, std::size_t>>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("tf-idf model: ") + e.what());
  }
}

TfIdfModel fit_tfidf(const std::vector<std::vector<std::string>>& corpus) {
  if (corpus.empty()) throw ConfigError("fit_tfidf: corpus is empty");
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& doc : corpus) {
    std::set<std::string> seen(doc.begin(), doc.end());
    for (const auto& t : seen) ++df[t];
  }
  return TfIdfModel(corpus.size(), std::move(df));
}

}  // namespace ics::text
