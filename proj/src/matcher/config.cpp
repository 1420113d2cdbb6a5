#include "ics/matcher/config.hpp"

#include <string>

#include "ics/errors.hpp"

namespace ics::matcher {

void StudentConfig::validate() const {
  if (kernel_widths.empty()) throw ConfigError("student config: at least one kernel width is required");
  if (channels == 0 || seq_len == 0 || embed_dim == 0) {
    throw ConfigError("student config: channels, seq_len and embed_dim must be positive");
  }
  for (auto w : kernel_widths) {
    if (w == 0 || w > seq_len) {
      throw ConfigError("student config: kernel width " + std::to_string(w) + " must lie in [1, seq_len=" +
                        std::to_string(seq_len) + "]");
    }
  }
  if (mlp_hidden.empty()) throw ConfigError("student config: the interaction MLP needs at least one layer");
  for (auto h : mlp_hidden) {
    if (h == 0) throw ConfigError("student config: MLP layer sizes must be positive");
  }
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("student config: dropout must lie in [0, 1)");
  if (l2 < 0.0) throw ConfigError("student config: l2 must be non-negative");
}

void to_json(nlohmann::json& j, const StudentConfig& c) {
  j = {{"kernel_widths", c.kernel_widths}, {"channels", c.channels}, {"seq_len", c.seq_len},
       {"embed_dim", c.embed_dim},         {"mlp_hidden", c.mlp_hidden}, {"dropout", c.dropout},
       {"l2", c.l2}};
}

void from_json(const nlohmann::json& j, StudentConfig& c) {
  StudentConfig d;
  c.kernel_widths = j.value("kernel_widths", d.kernel_widths);
  c.channels = j.value("channels", d.channels);
  c.seq_len = j.value("seq_len", d.seq_len);
  c.embed_dim = j.value("embed_dim", d.embed_dim);
  c.mlp_hidden = j.value("mlp_hidden", d.mlp_hidden);
  c.dropout = j.value("dropout", d.dropout);
  c.l2 = j.value("l2", d.l2);
}

void HybridConfig::validate() const {
  if (aspect_hidden.empty()) throw ConfigError("hybrid config: the aspect DNN needs at least one layer");
  if (fusion_hidden.empty()) throw ConfigError("hybrid config: the fusion MLP needs at least one layer");
  for (auto h : aspect_hidden) {
    if (h == 0) throw ConfigError("hybrid config: layer sizes must be positive");
  }
  for (auto h : fusion_hidden) {
    if (h == 0) throw ConfigError("hybrid config: layer sizes must be positive");
  }
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("hybrid config: dropout must lie in [0, 1)");
  if (l2 < 0.0) throw ConfigError("hybrid config: l2 must be non-negative");
}

void to_json(nlohmann::json& j, const HybridConfig& c) {
  j = {{"aspect_hidden", c.aspect_hidden}, {"fusion_hidden", c.fusion_hidden}, {"dropout", c.dropout}, {"l2", c.l2}};
}

void from_json(const nlohmann::json& j, HybridConfig& c) {
  HybridConfig d;
  c.aspect_hidden = j.value("aspect_hidden", d.aspect_hidden);
  c.fusion_hidden = j.value("fusion_hidden", d.fusion_hidden);
  c.dropout = j.value("dropout", d.dropout);
  c.l2 = j.value("l2", d.l2);
}

}  // namespace ics::matcher
