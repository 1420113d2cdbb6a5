#include "ics/trainer/losses.hpp"

#include "ics/errors.hpp"
#include "ics/numerics/ops.hpp"

namespace ics::trainer {

nn::Tensor hard_loss(const nn::Tensor& probs, std::span<const double> labels) {
  return nn::binary_cross_entropy(labels, probs);
}

nn::Tensor panel_loss(const nn::Tensor& probs, std::span<const double> labels,
                      const std::vector<std::vector<double>>& teacher_targets, std::span<const double> lambdas) {
  if (teacher_targets.size() != lambdas.size()) {
    throw DimensionError("panel loss: " + std::to_string(teacher_targets.size()) + " teacher target sets for " +
                         std::to_string(lambdas.size()) + " weights");
  }
  auto loss = hard_loss(probs, labels);
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    loss = nn::add(loss, nn::scale(nn::binary_cross_entropy(teacher_targets[i], probs), lambdas[i]));
  }
  return loss;
}

}  // namespace ics::trainer
