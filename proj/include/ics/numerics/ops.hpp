#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ics/numerics/rng.hpp"
#include "ics/numerics/tensor.hpp"

// Differentiable operations. Every op records itself on the active tape when
// any input requires a gradient; otherwise it is a plain forward computation.
namespace ics::nn {

inline constexpr double kBceEpsilon = 1e-7;

// [M x K] x [K x P] -> [M x P]
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
// a[M x P] + bias[P] on every row.
Tensor add_bias(const Tensor& a, const Tensor& bias);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor square(const Tensor& a);
Tensor scale(const Tensor& a, double factor);

// Concatenation along `axis` (0 = rows, 1 = columns) for rank-2 operands;
// rank-1 operands concatenate end to end.
Tensor concat(std::span<const Tensor> parts, std::size_t axis);

Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);

// Inverted dropout: survivors are scaled by 1/(1-p). Identity when !training.
Tensor dropout(const Tensor& a, double p, Rng& rng, bool training);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// lambda * sum(theta^2) over all given tensors.
Tensor l2_penalty(std::span<const Tensor> params, double lambda);

// Mean binary cross-entropy of `prediction` (probabilities) against constant
// targets. Predictions are clamped to [eps, 1-eps]; soft targets are allowed.
Tensor binary_cross_entropy(std::span<const double> targets, const Tensor& prediction);
double binary_cross_entropy(double target, double prediction);

// Row gather from an embedding table [V x d]. Gradient never flows into
// `frozen_row` (the PAD row).
Tensor embedding_lookup(const Tensor& table, std::span<const std::int32_t> ids,
                        std::int32_t frozen_row = 0);

// Sequence convolution with same-length output.
//
// input holds `batch` sequences of `seq_len` rows each ([batch*seq_len x d]);
// kernel is [width x d x d_o]; bias is [d_o]. Output row t of a sequence is
// bias + sum_j input[t+j] * kernel[j], with rows past the sequence end read
// as zeros.
Tensor conv1d(const Tensor& input, const Tensor& kernel, const Tensor& bias, std::size_t seq_len);
// Single sequence: seq_len = input.rows().
Tensor conv1d(const Tensor& input, const Tensor& kernel, const Tensor& bias);

// Per-channel max / mean over the unmasked rows of each sequence.
// [batch*seq_len x C] -> [batch x C]. Throws EmptySequenceError for a sequence
// with no unmasked rows.
Tensor max_over_time(const Tensor& x, std::span<const std::uint8_t> mask, std::size_t seq_len);
Tensor mean_over_time(const Tensor& x, std::span<const std::uint8_t> mask, std::size_t seq_len);

}  // namespace ics::nn
