#pragma once

#include <span>
#include <vector>

#include "ics/numerics/tensor.hpp"

namespace ics::trainer {

// Mean BCE of predicted probabilities against hard labels.
nn::Tensor hard_loss(const nn::Tensor& probs, std::span<const double> labels);

// sum_i lambda_i * BCE(teacher_i, p) + BCE(y, p), each term a batch mean.
// teacher_targets[i][r] is teacher i's probability for row r, used as a soft
// target.
nn::Tensor panel_loss(const nn::Tensor& probs, std::span<const double> labels,
                      const std::vector<std::vector<double>>& teacher_targets, std::span<const double> lambdas);

}  // namespace ics::trainer
