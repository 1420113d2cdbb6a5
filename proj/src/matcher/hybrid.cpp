#include "ics/matcher/hybrid.hpp"

#include "ics/errors.hpp"
#include "ics/numerics/ops.hpp"
#include "ics/numerics/tape.hpp"

namespace ics::matcher {

HybridModel::HybridModel(const StudentModel& student, AspectSchema schema, HybridConfig config, nn::Rng& rng)
    : student_(student.clone()), schema_(std::move(schema)), config_(std::move(config)) {
  config_.validate();
  if (schema_.length() == 0) throw ConfigError("hybrid model needs a non-empty aspect schema");
  aspect_dnn_ = Mlp::build(schema_.length(), config_.aspect_hidden, rng);
  fusion_ = Mlp::build(student_.config().feature_dim() + aspect_dnn_.out_dim(), config_.fusion_hidden, rng);
  head_ = Dense::glorot(fusion_.out_dim(), 1, rng);
}

void HybridModel::set_student_frozen(bool frozen) { student_frozen_ = frozen; }

nn::Tensor HybridModel::aspect_matrix(const std::vector<const AspectFeatureVector*>& aspects) const {
  if (aspects.empty()) throw DimensionError("aspect_matrix: empty batch");
  const auto len = schema_.length();
  std::vector<double> values;
  values.reserve(aspects.size() * len);
  for (const auto* a : aspects) {
    if (a->values.size() != len) {
      throw DimensionError("aspect vector has length " + std::to_string(a->values.size()) + ", schema expects " +
                           std::to_string(len));
    }
    values.insert(values.end(), a->values.begin(), a->values.end());
  }
  return nn::Tensor({aspects.size(), len}, std::move(values));
}

nn::Tensor HybridModel::aspect_features(const nn::Tensor& aspects, const ForwardOptions& opts) const {
  if (aspects.rank() != 2 || aspects.cols() != schema_.length()) {
    throw DimensionError("aspect input " + nn::shape_string(aspects.shape()) + " does not match schema length " +
                         std::to_string(schema_.length()));
  }
  return aspect_dnn_.forward(aspects, config_.dropout, opts);
}

nn::Tensor HybridModel::fuse(const nn::Tensor& text_features, const nn::Tensor& aspect_feats,
                             const ForwardOptions& opts) const {
  std::vector<nn::Tensor> parts{text_features, aspect_feats};
  return head_.forward(fusion_.forward(nn::concat(parts, 1), config_.dropout, opts));
}

nn::Tensor HybridModel::logits(const TokenBatch& u, const TokenBatch& s, const nn::Tensor& aspects,
                               const ForwardOptions& opts) const {
  nn::Tensor m;
  if (student_frozen_) {
    // A frozen student runs in eval mode off the tape.
    nn::NoGradGuard no_grad;
    m = student_.features(u, s, ForwardOptions{});
  } else {
    m = student_.features(u, s, opts);
  }
  return fuse(m, aspect_features(aspects, opts), opts);
}

nn::Tensor HybridModel::predict(const TokenBatch& u, const TokenBatch& s, const nn::Tensor& aspects,
                                const ForwardOptions& opts) const {
  return nn::sigmoid(logits(u, s, aspects, opts));
}

double HybridModel::predict(const std::vector<std::string>& u, const std::vector<std::string>& s,
                            const AspectFeatureVector& aspects) const {
  nn::NoGradGuard no_grad;
  return predict(student_.batch(u), student_.batch(s), aspect_matrix({&aspects}), ForwardOptions{}).item();
}

std::vector<nn::Parameter> HybridModel::student_parameters() const {
  auto out = student_.parameters("student.", student_frozen_);
  // The student's own head never feeds the fused output.
  for (auto& p : out) {
    if (p.name.rfind("student.head.", 0) == 0) p.frozen = true;
  }
  return out;
}

std::vector<nn::Parameter> HybridModel::parameters() const {
  auto out = student_parameters();
  aspect_dnn_.append_parameters("aspect", false, out);
  fusion_.append_parameters("fusion", false, out);
  out.push_back({"head.weight", head_.weight, false});
  out.push_back({"head.bias", head_.bias, false});
  return out;
}

std::vector<nn::Tensor> HybridModel::regularized() const {
  std::vector<nn::Tensor> out;
  if (!student_frozen_) {
    out = student_.regularized();
    std::erase_if(out, [&](const nn::Tensor& t) { return t.same_storage(student_.head().weight); });
  }
  for (const auto& l : aspect_dnn_.layers) out.push_back(l.weight);
  for (const auto& l : fusion_.layers) out.push_back(l.weight);
  out.push_back(head_.weight);
  return out;
}

double predict_hybrid(const std::vector<std::string>& u, const std::vector<std::string>& s,
                      const AspectFeatureVector& aspects, const HybridModel& model) {
  return model.predict(u, s, aspects);
}

}  // namespace ics::matcher
