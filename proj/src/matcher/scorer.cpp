#include "ics/matcher/scorer.hpp"

#include <algorithm>

#include "ics/errors.hpp"
#include "ics/numerics/ops.hpp"
#include "ics/numerics/tape.hpp"

namespace ics::matcher {
namespace {
constexpr std::size_t kEncodeChunk = 64;

// Rows [begin, end) of a [R x C] matrix as a new tensor.
nn::Tensor row_block(const nn::Tensor& m, std::size_t begin, std::size_t end) {
  const auto cols = m.cols();
  auto v = m.values();
  return nn::Tensor({end - begin, cols}, std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(begin * cols),
                                                             v.begin() + static_cast<std::ptrdiff_t>(end * cols)));
}
}  // namespace

CatalogScorer::CatalogScorer(const StudentModel& model, const std::vector<std::vector<std::string>>& scenario_tokens)
    : model_(&model), scenario_count_(scenario_tokens.size()), encoding_dim_(model.config().encoding_dim()) {
  nn::NoGradGuard no_grad;
  const auto e = encoding_dim_;
  const auto& first = model.mlp().layers.front();
  const auto h1 = first.out_dim();
  w_u_ = row_block(first.weight, 0, e);
  auto w_s = row_block(first.weight, e, 2 * e);
  w_prod_diff_ = row_block(first.weight, 2 * e, 4 * e);

  scenario_encodings_.reserve(scenario_count_ * e);
  scenario_partial_.reserve(scenario_count_ * h1);
  for (std::size_t begin = 0; begin < scenario_count_; begin += kEncodeChunk) {
    const auto end = std::min(scenario_count_, begin + kEncodeChunk);
    std::vector<const std::vector<std::string>*> chunk;
    for (auto i = begin; i < end; ++i) chunk.push_back(&scenario_tokens[i]);
    auto enc = model.encode(model.batch(chunk));
    auto partial = nn::add_bias(nn::matmul(enc, w_s), first.bias);
    scenario_encodings_.insert(scenario_encodings_.end(), enc.values().begin(), enc.values().end());
    scenario_partial_.insert(scenario_partial_.end(), partial.values().begin(), partial.values().end());
  }
}

nn::Tensor CatalogScorer::text_features(const std::vector<std::string>& utterance,
                                        std::span<const std::size_t> candidates) const {
  const auto e = encoding_dim_;
  const auto n = candidates.size();
  const auto h1 = w_u_.cols();
  auto u = model_->encode(model_->batch(utterance));
  const auto u_proj = nn::matmul(u, w_u_);
  auto u_part = u_proj.values();
  auto uv = u.values();

  std::vector<double> prod_diff(n * 2 * e);
  std::vector<double> pre(n * h1);
  for (std::size_t r = 0; r < n; ++r) {
    const auto c = candidates[r];
    if (c >= scenario_count_) {
      throw DimensionError("candidate index " + std::to_string(c) + " outside a catalog of " +
                           std::to_string(scenario_count_));
    }
    const double* s = scenario_encodings_.data() + c * e;
    double* row = prod_diff.data() + r * 2 * e;
    for (std::size_t i = 0; i < e; ++i) {
      const double diff = uv[i] - s[i];
      row[i] = uv[i] * s[i];
      row[e + i] = diff * diff;
    }
    const double* partial = scenario_partial_.data() + c * h1;
    for (std::size_t j = 0; j < h1; ++j) pre[r * h1 + j] = partial[j] + u_part[j];
  }
  auto h = nn::relu(nn::add(nn::matmul(nn::Tensor({n, 2 * e}, std::move(prod_diff)), w_prod_diff_),
                            nn::Tensor({n, h1}, std::move(pre))));
  const auto& layers = model_->mlp().layers;
  for (std::size_t i = 1; i < layers.size(); ++i) h = nn::relu(layers[i].forward(h));
  return h;
}

std::vector<double> CatalogScorer::score(const std::vector<std::string>& utterance,
                                         std::span<const std::size_t> candidates) const {
  if (candidates.empty()) return {};
  nn::NoGradGuard no_grad;
  auto p = nn::sigmoid(model_->head().forward(text_features(utterance, candidates)));
  return {p.values().begin(), p.values().end()};
}

std::vector<double> CatalogScorer::score_hybrid(const HybridModel& hybrid, const std::vector<std::string>& utterance,
                                                std::span<const std::size_t> candidates,
                                                const AspectFeatureVector& aspects) const {
  if (candidates.empty()) return {};
  nn::NoGradGuard no_grad;
  const auto n = candidates.size();
  auto m = text_features(utterance, candidates);
  auto mbar = hybrid.aspect_features(hybrid.aspect_matrix({&aspects}), ForwardOptions{});
  std::vector<double> tiled;
  tiled.reserve(n * mbar.size());
  for (std::size_t r = 0; r < n; ++r) tiled.insert(tiled.end(), mbar.values().begin(), mbar.values().end());
  auto p = nn::sigmoid(hybrid.fuse(m, nn::Tensor({n, mbar.size()}, std::move(tiled)), ForwardOptions{}));
  return {p.values().begin(), p.values().end()};
}

}  // namespace ics::matcher
