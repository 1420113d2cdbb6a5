#include "ics/numerics/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "ics/errors.hpp"
#include "ics/numerics/tape.hpp"

namespace ics::nn {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

ConstMatMap as_matrix(std::span<const double> data, std::size_t rows, std::size_t cols) {
  return ConstMatMap(data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
MatMap as_matrix(std::span<double> data, std::size_t rows, std::size_t cols) {
  return MatMap(data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

// Records `backward` when a tape is active and any input wants a gradient.
template <typename... Ts>
bool wants_grad(const Ts&... inputs) {
  return Tape::active() != nullptr && (inputs.requires_grad() || ...);
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

void require_rank2(const Tensor& a, const char* op) {
  if (a.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a rank-2 tensor, got " + shape_string(a.shape()));
  }
}

template <typename Fwd, typename Bwd>
Tensor unary(const Tensor& a, Fwd fwd, Bwd bwd) {
  std::vector<double> out(a.size());
  auto av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(av[i]);
  Tensor result(a.shape(), std::move(out));
  if (wants_grad(a)) {
    Tape::active()->record(result, [a, result, bwd]() mutable {
      auto g = result.grad();
      auto x = a.values();
      auto y = result.values();
      auto ga = a.grad_accumulator();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bwd(x[i], y[i]);
    });
  }
  return result;
}

void check_mask(const Tensor& x, std::span<const std::uint8_t> mask, std::size_t seq_len, const char* op) {
  require_rank2(x, op);
  if (seq_len == 0 || x.rows() % seq_len != 0) {
    throw DimensionError(std::string(op) + ": " + std::to_string(x.rows()) +
                         " rows are not a whole number of sequences of length " + std::to_string(seq_len));
  }
  if (mask.size() != x.rows()) {
    throw DimensionError(std::string(op) + ": mask length " + std::to_string(mask.size()) +
                         " does not match " + std::to_string(x.rows()) + " rows");
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions disagree for " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  const auto m = a.rows(), k = a.cols(), p = b.cols();
  Tensor result = Tensor::zeros({m, p});
  as_matrix(result.mutable_values(), m, p).noalias() = as_matrix(a.values(), m, k) * as_matrix(b.values(), k, p);
  if (wants_grad(a, b)) {
    Tape::active()->record(result, [a, b, result, m, k, p]() mutable {
      auto g = as_matrix(result.grad(), m, p);
      if (a.requires_grad()) {
        as_matrix(a.grad_accumulator(), m, k).noalias() += g * as_matrix(b.values(), k, p).transpose();
      }
      if (b.requires_grad()) {
        as_matrix(b.grad_accumulator(), k, p).noalias() += as_matrix(a.values(), m, k).transpose() * g;
      }
    });
  }
  return result;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) + b.at(i);
  Tensor result(a.shape(), std::move(out));
  if (wants_grad(a, b)) {
    Tape::active()->record(result, [a, b, result]() mutable {
      auto g = result.grad();
      if (a.requires_grad()) {
        auto ga = a.grad_accumulator();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_accumulator();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      }
    });
  }
  return result;
}

Tensor add_bias(const Tensor& a, const Tensor& bias) {
  require_rank2(a, "add_bias");
  if (bias.size() != a.cols()) {
    throw DimensionError("add_bias: bias " + shape_string(bias.shape()) + " does not match columns of " +
                         shape_string(a.shape()));
  }
  const auto m = a.rows(), p = a.cols();
  std::vector<double> out(a.values().begin(), a.values().end());
  auto bv = bias.values();
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < p; ++c) out[r * p + c] += bv[c];
  }
  Tensor result(a.shape(), std::move(out));
  if (wants_grad(a, bias)) {
    Tape::active()->record(result, [a, bias, result, m, p]() mutable {
      auto g = result.grad();
      if (a.requires_grad()) {
        auto ga = a.grad_accumulator();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (bias.requires_grad()) {
        auto gb = bias.grad_accumulator();
        for (std::size_t r = 0; r < m; ++r) {
          for (std::size_t c = 0; c < p; ++c) gb[c] += g[r * p + c];
        }
      }
    });
  }
  return result;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) - b.at(i);
  Tensor result(a.shape(), std::move(out));
  if (wants_grad(a, b)) {
    Tape::active()->record(result, [a, b, result]() mutable {
      auto g = result.grad();
      if (a.requires_grad()) {
        auto ga = a.grad_accumulator();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_accumulator();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      }
    });
  }
  return result;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * b.at(i);
  Tensor result(a.shape(), std::move(out));
  if (wants_grad(a, b)) {
    Tape::active()->record(result, [a, b, result]() mutable {
      auto g = result.grad();
      if (a.requires_grad()) {
        auto ga = a.grad_accumulator();
        auto bv = b.values();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_accumulator();
        auto av = a.values();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
      }
    });
  }
  return result;
}

Tensor square(const Tensor& a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(a, [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Tensor relu(const Tensor& a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: no operands");
  const auto rank = parts.front().rank();
  for (const auto& p : parts) {
    if (p.rank() != rank) throw DimensionError("concat: operands differ in rank");
  }
  if (rank == 1) {
    if (axis != 0) throw DimensionError("concat: axis out of range for rank-1 operands");
    std::vector<double> out;
    for (const auto& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
    std::size_t total = out.size();
    Tensor result({total}, std::move(out));
    bool any = false;
    for (const auto& p : parts) any = any || p.requires_grad();
    if (any && Tape::active()) {
      std::vector<Tensor> inputs(parts.begin(), parts.end());
      Tape::active()->record(result, [inputs, result]() mutable {
        auto g = result.grad();
        std::size_t offset = 0;
        for (auto& in : inputs) {
          if (in.requires_grad()) {
            auto gi = in.grad_accumulator();
            for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += g[offset + i];
          }
          offset += in.size();
        }
      });
    }
    return result;
  }
  if (rank != 2 || axis > 1) throw DimensionError("concat: only rank-1 and rank-2 operands are supported");

  const auto& first = parts.front();
  std::size_t rows = 0, cols = 0;
  for (const auto& p : parts) {
    if (axis == 0) {
      if (p.cols() != first.cols()) {
        throw DimensionError("concat(axis=0): column mismatch " + shape_string(first.shape()) + " vs " +
                             shape_string(p.shape()));
      }
      rows += p.rows();
    } else {
      if (p.rows() != first.rows()) {
        throw DimensionError("concat(axis=1): row mismatch " + shape_string(first.shape()) + " vs " +
                             shape_string(p.shape()));
      }
      cols += p.cols();
    }
  }
  if (axis == 0) cols = first.cols();
  else rows = first.rows();

  std::vector<double> out(rows * cols);
  if (axis == 0) {
    std::size_t offset = 0;
    for (const auto& p : parts) {
      std::copy(p.values().begin(), p.values().end(), out.begin() + static_cast<std::ptrdiff_t>(offset));
      offset += p.size();
    }
  } else {
    std::size_t col_offset = 0;
    for (const auto& p : parts) {
      const auto pc = p.cols();
      auto pv = p.values();
      for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(pv.begin() + static_cast<std::ptrdiff_t>(r * pc), pc,
                    out.begin() + static_cast<std::ptrdiff_t>(r * cols + col_offset));
      }
      col_offset += pc;
    }
  }
  Tensor result({rows, cols}, std::move(out));
  bool any = false;
  for (const auto& p : parts) any = any || p.requires_grad();
  if (any && Tape::active()) {
    std::vector<Tensor> inputs(parts.begin(), parts.end());
    Tape::active()->record(result, [inputs, result, axis, rows, cols]() mutable {
      auto g = result.grad();
      std::size_t offset = 0;
      for (auto& in : inputs) {
        if (in.requires_grad()) {
          auto gi = in.grad_accumulator();
          if (axis == 0) {
            for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += g[offset + i];
          } else {
            const auto pc = in.cols();
            for (std::size_t r = 0; r < rows; ++r) {
              for (std::size_t c = 0; c < pc; ++c) gi[r * pc + c] += g[r * cols + offset + c];
            }
          }
        }
        offset += axis == 0 ? in.size() : in.cols();
      }
    });
  }
  return result;
}

Tensor dropout(const Tensor& a, double p, Rng& rng, bool training) {
  if (p < 0.0 || p >= 1.0) throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(p));
  if (!training || p == 0.0) return a;
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> mask(a.size());
  for (auto& m : mask) m = rng.bernoulli(p) ? 0.0 : keep_scale;
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * mask[i];
  Tensor result(a.shape(), std::move(out));
  if (wants_grad(a)) {
    Tape::active()->record(result, [a, result, mask = std::move(mask)]() mutable {
      auto g = result.grad();
      auto ga = a.grad_accumulator();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * mask[i];
    });
  }
  return result;
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.values()) total += v;
  Tensor result = Tensor::scalar(total);
  if (wants_grad(a)) {
    Tape::active()->record(result, [a, result]() mutable {
      const double g = result.grad()[0];
      for (auto& x : a.grad_accumulator()) x += g;
    });
  }
  return result;
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

Tensor l2_penalty(std::span<const Tensor> params, double lambda) {
  double total = 0.0;
  for (const auto& p : params) {
    for (double v : p.values()) total += v * v;
  }
  Tensor result = Tensor::scalar(lambda * total);
  bool any = false;
  for (const auto& p : params) any = any || p.requires_grad();
  if (any && Tape::active()) {
    std::vector<Tensor> inputs(params.begin(), params.end());
    Tape::active()->record(result, [inputs, result, lambda]() mutable {
      const double g = result.grad()[0];
      for (auto& p : inputs) {
        if (!p.requires_grad()) continue;
        auto gp = p.grad_accumulator();
        auto v = p.values();
        for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g * 2.0 * lambda * v[i];
      }
    });
  }
  return result;
}

double binary_cross_entropy(double target, double prediction) {
  const double p = std::clamp(prediction, kBceEpsilon, 1.0 - kBceEpsilon);
  return -(target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
}

Tensor binary_cross_entropy(std::span<const double> targets, const Tensor& prediction) {
  if (targets.size() != prediction.size()) {
    throw DimensionError("binary_cross_entropy: " + std::to_string(targets.size()) + " targets for prediction " +
                         shape_string(prediction.shape()));
  }
  const auto n = static_cast<double>(targets.size());
  double total = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) total += binary_cross_entropy(targets[i], prediction.at(i));
  Tensor result = Tensor::scalar(total / n);
  if (wants_grad(prediction)) {
    std::vector<double> t(targets.begin(), targets.end());
    Tape::active()->record(result, [prediction, result, t = std::move(t), n]() mutable {
      const double g = result.grad()[0] / n;
      auto gp = prediction.grad_accumulator();
      auto pv = prediction.values();
      for (std::size_t i = 0; i < t.size(); ++i) {
        const double p = pv[i];
        // Clamped region has zero slope.
        if (p < kBceEpsilon || p > 1.0 - kBceEpsilon) continue;
        gp[i] += g * (-t[i] / p + (1.0 - t[i]) / (1.0 - p));
      }
    });
  }
  return result;
}

Tensor embedding_lookup(const Tensor& table, std::span<const std::int32_t> ids, std::int32_t frozen_row) {
  require_rank2(table, "embedding_lookup");
  const auto vocab = table.rows(), dim = table.cols();
  if (ids.empty()) throw DimensionError("embedding_lookup: no ids");
  std::vector<double> out(ids.size() * dim);
  auto tv = table.values();
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const auto id = ids[r];
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw DimensionError("embedding_lookup: id " + std::to_string(id) + " outside table " +
                           shape_string(table.shape()));
    }
    std::copy_n(tv.begin() + static_cast<std::ptrdiff_t>(id * dim), dim,
                out.begin() + static_cast<std::ptrdiff_t>(r * dim));
  }
  Tensor result({ids.size(), dim}, std::move(out));
  if (wants_grad(table)) {
    std::vector<std::int32_t> idv(ids.begin(), ids.end());
    Tape::active()->record(result, [table, result, idv = std::move(idv), dim, frozen_row]() mutable {
      auto g = result.grad();
      auto gt = table.grad_accumulator();
      for (std::size_t r = 0; r < idv.size(); ++r) {
        if (idv[r] == frozen_row) continue;
        const auto base = static_cast<std::size_t>(idv[r]) * dim;
        for (std::size_t c = 0; c < dim; ++c) gt[base + c] += g[r * dim + c];
      }
    });
  }
  return result;
}

Tensor conv1d(const Tensor& input, const Tensor& kernel, const Tensor& bias, std::size_t seq_len) {
  require_rank2(input, "conv1d");
  if (kernel.rank() != 3) {
    throw DimensionError("conv1d: kernel must be [width x d x d_o], got " + shape_string(kernel.shape()));
  }
  const auto width = kernel.shape()[0], d = kernel.shape()[1], d_out = kernel.shape()[2];
  if (input.cols() != d) {
    throw DimensionError("conv1d: input " + shape_string(input.shape()) + " does not match kernel " +
                         shape_string(kernel.shape()));
  }
  if (bias.size() != d_out) {
    throw DimensionError("conv1d: bias " + shape_string(bias.shape()) + " does not match kernel " +
                         shape_string(kernel.shape()));
  }
  if (seq_len == 0 || input.rows() % seq_len != 0) {
    throw DimensionError("conv1d: " + std::to_string(input.rows()) + " rows are not a whole number of length-" +
                         std::to_string(seq_len) + " sequences");
  }
  if (width > seq_len) {
    throw ConfigError("conv1d: kernel width " + std::to_string(width) + " exceeds sequence length " +
                      std::to_string(seq_len));
  }
  const auto total_rows = input.rows();
  const auto col_width = width * d;

  // Row t of a sequence gathers input rows t..t+width-1 (zeros past the end).
  std::vector<double> columns(total_rows * col_width, 0.0);
  auto iv = input.values();
  for (std::size_t start = 0; start < total_rows; start += seq_len) {
    for (std::size_t t = 0; t < seq_len; ++t) {
      for (std::size_t j = 0; j < width && t + j < seq_len; ++j) {
        std::copy_n(iv.begin() + static_cast<std::ptrdiff_t>((start + t + j) * d), d,
                    columns.begin() + static_cast<std::ptrdiff_t>((start + t) * col_width + j * d));
      }
    }
  }
  Tensor result = Tensor::zeros({total_rows, d_out});
  {
    auto out = as_matrix(result.mutable_values(), total_rows, d_out);
    out.noalias() = as_matrix(std::span<const double>(columns), total_rows, col_width) *
                    as_matrix(kernel.values(), col_width, d_out);
    auto bv = bias.values();
    for (std::size_t r = 0; r < total_rows; ++r) {
      for (std::size_t c = 0; c < d_out; ++c) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) += bv[c];
    }
  }
  if (wants_grad(input, kernel, bias)) {
    Tape::active()->record(result, [input, kernel, bias, result, columns = std::move(columns), seq_len, total_rows,
                                    width, d, d_out, col_width]() mutable {
      auto g = as_matrix(result.grad(), total_rows, d_out);
      if (kernel.requires_grad()) {
        as_matrix(kernel.grad_accumulator(), col_width, d_out).noalias() +=
            as_matrix(std::span<const double>(columns), total_rows, col_width).transpose() * g;
      }
      if (bias.requires_grad()) {
        auto gb = bias.grad_accumulator();
        for (std::size_t r = 0; r < total_rows; ++r) {
          for (std::size_t c = 0; c < d_out; ++c) gb[c] += g(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        }
      }
      if (input.requires_grad()) {
        RowMatrix dcols = g * as_matrix(kernel.values(), col_width, d_out).transpose();
        auto gi = input.grad_accumulator();
        for (std::size_t start = 0; start < total_rows; start += seq_len) {
          for (std::size_t t = 0; t < seq_len; ++t) {
            const double* src = dcols.data() + (start + t) * col_width;
            for (std::size_t j = 0; j < width && t + j < seq_len; ++j) {
              double* dst = gi.data() + (start + t + j) * d;
              for (std::size_t c = 0; c < d; ++c) dst[c] += src[j * d + c];
            }
          }
        }
      }
    });
  }
  return result;
}

Tensor conv1d(const Tensor& input, const Tensor& kernel, const Tensor& bias) {
  require_rank2(input, "conv1d");
  return conv1d(input, kernel, bias, input.rows());
}

Tensor max_over_time(const Tensor& x, std::span<const std::uint8_t> mask, std::size_t seq_len) {
  check_mask(x, mask, seq_len, "max_over_time");
  const auto batch = x.rows() / seq_len, channels = x.cols();
  std::vector<double> out(batch * channels, -std::numeric_limits<double>::infinity());
  std::vector<std::size_t> argmax(batch * channels, 0);
  auto xv = x.values();
  for (std::size_t b = 0; b < batch; ++b) {
    bool any = false;
    for (std::size_t t = 0; t < seq_len; ++t) {
      const auto row = b * seq_len + t;
      if (!mask[row]) continue;
      any = true;
      for (std::size_t c = 0; c < channels; ++c) {
        const double v = xv[row * channels + c];
        if (v > out[b * channels + c]) {
          out[b * channels + c] = v;
          argmax[b * channels + c] = row;
        }
      }
    }
    if (!any) throw EmptySequenceError("max_over_time: sequence " + std::to_string(b) + " has no unmasked positions");
  }
  Tensor result({batch, channels}, std::move(out));
  if (wants_grad(x)) {
    Tape::active()->record(result, [x, result, argmax = std::move(argmax), channels]() mutable {
      auto g = result.grad();
      auto gx = x.grad_accumulator();
      for (std::size_t i = 0; i < g.size(); ++i) gx[argmax[i] * channels + i % channels] += g[i];
    });
  }
  return result;
}

Tensor mean_over_time(const Tensor& x, std::span<const std::uint8_t> mask, std::size_t seq_len) {
  check_mask(x, mask, seq_len, "mean_over_time");
  const auto batch = x.rows() / seq_len, channels = x.cols();
  std::vector<double> out(batch * channels, 0.0);
  std::vector<double> inv_count(batch, 0.0);
  auto xv = x.values();
  for (std::size_t b = 0; b < batch; ++b) {
    std::size_t count = 0;
    for (std::size_t t = 0; t < seq_len; ++t) {
      const auto row = b * seq_len + t;
      if (!mask[row]) continue;
      ++count;
      for (std::size_t c = 0; c < channels; ++c) out[b * channels + c] += xv[row * channels + c];
    }
    if (count == 0) {
      throw EmptySequenceError("mean_over_time: sequence " + std::to_string(b) + " has no unmasked positions");
    }
    inv_count[b] = 1.0 / static_cast<double>(count);
    for (std::size_t c = 0; c < channels; ++c) out[b * channels + c] *= inv_count[b];
  }
  Tensor result({batch, channels}, std::move(out));
  if (wants_grad(x)) {
    std::vector<std::uint8_t> m(mask.begin(), mask.end());
    Tape::active()->record(result, [x, result, m = std::move(m), inv_count = std::move(inv_count), seq_len,
                                    channels]() mutable {
      auto g = result.grad();
      auto gx = x.grad_accumulator();
      for (std::size_t row = 0; row < m.size(); ++row) {
        if (!m[row]) continue;
        const auto b = row / seq_len;
        for (std::size_t c = 0; c < channels; ++c) gx[row * channels + c] += g[b * channels + c] * inv_count[b];
      }
    });
  }
  return result;
}

}  // namespace ics::nn
