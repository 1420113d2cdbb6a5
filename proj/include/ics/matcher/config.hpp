#pragma once

#include <cstddef>
#include <vector>

#include <nlohmann/json.hpp>

namespace ics::matcher {

// TextCNN matcher hyperparameters. Defaults follow the reference setup:
// widths 2..5, 64 channels each, a 3-layer interaction MLP, dropout 0.2 and
// L2 0.05.
struct StudentConfig {
  std::vector<std::size_t> kernel_widths{2, 3, 4, 5};
  std::size_t channels = 64;    // d_o per kernel width
  std::size_t seq_len = 32;     // N
  std::size_t embed_dim = 64;   // d
  std::vector<std::size_t> mlp_hidden{512, 256, 128};
  double dropout = 0.2;
  double l2 = 0.05;

  std::size_t kernel_count() const noexcept { return kernel_widths.size(); }
  // 2 * k * d_o
  std::size_t encoding_dim() const noexcept { return 2 * kernel_count() * channels; }
  // 8 * k * d_o
  std::size_t interaction_dim() const noexcept { return 4 * encoding_dim(); }
  // dim(m)
  std::size_t feature_dim() const noexcept { return mlp_hidden.back(); }

  // Throws ConfigError on an empty kernel set, widths beyond N, zero sizes or
  // a dropout rate outside [0, 1).
  void validate() const;
};

void to_json(nlohmann::json& j, const StudentConfig& c);
void from_json(const nlohmann::json& j, StudentConfig& c);

struct HybridConfig {
  std::vector<std::size_t> aspect_hidden{32, 32};  // last entry is dim(m-bar)
  std::vector<std::size_t> fusion_hidden{64};
  double dropout = 0.2;
  double l2 = 0.05;

  void validate() const;
};

void to_json(nlohmann::json& j, const HybridConfig& c);
void from_json(const nlohmann::json& j, HybridConfig& c);

}  // namespace ics::matcher
