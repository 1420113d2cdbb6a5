#pragma once

// Finite-difference checks for every differentiable numerics op, shared by the
// unit tests and the acceptance binary.

#include <string>
#include <vector>

#include "gradcheck.hpp"

namespace ics::testing {

struct OpGradientReport {
  std::string op;
  std::size_t trials = 0;
  double max_relative_error = 0.0;
};

inline std::vector<OpGradientReport> run_op_gradient_suite(std::size_t trials = 50, std::uint64_t seed = 2024) {
  using namespace ics::nn;
  Rng rng(seed);
  std::vector<OpGradientReport> reports;

  auto run = [&](const std::string& name, auto&& build_trial) {
    OpGradientReport r{name, trials, 0.0};
    for (std::size_t t = 0; t < trials; ++t) {
      auto [loss, params] = build_trial();
      auto res = grad_check(loss, params);
      r.max_relative_error = std::max(r.max_relative_error, res.max_relative_error);
    }
    reports.push_back(r);
  };
  using Trial = std::pair<std::function<Tensor()>, std::vector<Tensor>>;

  run("matmul", [&]() -> Trial {
    const auto m = 1 + rng.index(4), k = 1 + rng.index(4), p = 1 + rng.index(4);
    auto a = random_tensor({m, k}, rng), b = random_tensor({k, p}, rng);
    auto w = random_tensor({m, p}, rng, -2, 2, false);
    return {[=] { return weighted_sum(matmul(a, b), w); }, {a, b}};
  });
  run("add", [&]() -> Trial {
    const auto m = 1 + rng.index(4), n = 1 + rng.index(4);
    auto a = random_tensor({m, n}, rng), b = random_tensor({m, n}, rng);
    auto w = random_tensor({m, n}, rng, -2, 2, false);
    return {[=] { return weighted_sum(add(a, b), w); }, {a, b}};
  });
  run("add_bias", [&]() -> Trial {
    const auto m = 1 + rng.index(4), n = 1 + rng.index(4);
    auto a = random_tensor({m, n}, rng), b = random_tensor({n}, rng);
    auto w = random_tensor({m, n}, rng, -2, 2, false);
    return {[=] { return weighted_sum(add_bias(a, b), w); }, {a, b}};
  });
  run("sub", [&]() -> Trial {
    const auto n = 1 + rng.index(6);
    auto a = random_tensor({n}, rng), b = random_tensor({n}, rng);
    auto w = random_tensor({n}, rng, -2, 2, false);
    return {[=] { return weighted_sum(sub(a, b), w); }, {a, b}};
  });
  run("mul", [&]() -> Trial {
    const auto n = 1 + rng.index(6);
    auto a = random_tensor({n}, rng), b = random_tensor({n}, rng);
    auto w = random_tensor({n}, rng, -2, 2, false);
    return {[=] { return weighted_sum(mul(a, b), w); }, {a, b}};
  });
  run("square", [&]() -> Trial {
    const auto n = 1 + rng.index(6);
    auto a = random_tensor({n}, rng);
    auto w = random_tensor({n}, rng, -2, 2, false);
    return {[=] { return weighted_sum(square(a), w); }, {a}};
  });
  run("scale", [&]() -> Trial {
    const auto n = 1 + rng.index(6);
    const double c = rng.uniform(-2, 2);
    auto a = random_tensor({n}, rng);
    auto w = random_tensor({n}, rng, -2, 2, false);
    return {[=] { return weighted_sum(scale(a, c), w); }, {a}};
  });
  run("concat", [&]() -> Trial {
    const auto rows = 1 + rng.index(3);
    const auto axis = rng.index(2);
    auto a = random_tensor({rows, 1 + rng.index(3)}, rng);
    auto b = axis == 1 ? random_tensor({rows, 1 + rng.index(3)}, rng) : random_tensor({1 + rng.index(3), a.cols()}, rng);
    Tensor probe = concat(std::vector<Tensor>{a, b}, axis);
    auto w = random_tensor(probe.shape(), rng, -2, 2, false);
    return {[=] { return weighted_sum(concat(std::vector<Tensor>{a, b}, axis), w); }, {a, b}};
  });
  run("relu", [&]() -> Trial {
    const auto n = 2 + rng.index(6);
    auto a = random_tensor({n}, rng);
    auto w = random_tensor({n}, rng, -2, 2, false);
    return {[=] { return weighted_sum(relu(a), w); }, {a}};
  });
  run("sigmoid", [&]() -> Trial {
    const auto n = 1 + rng.index(6);
    auto a = random_tensor({n}, rng);
    auto w = random_tensor({n}, rng, -2, 2, false);
    return {[=] { return weighted_sum(sigmoid(a), w); }, {a}};
  });
  run("dropout", [&]() -> Trial {
    const auto n = 2 + rng.index(6);
    const auto mask_seed = rng.next();
    auto a = random_tensor({n}, rng);
    auto w = random_tensor({n}, rng, -2, 2, false);
    return {[=] {
              Rng local(mask_seed);
              return weighted_sum(dropout(a, 0.2, local, true), w);
            },
            {a}};
  });
  run("sum", [&]() -> Trial {
    auto a = random_tensor({1 + rng.index(3), 1 + rng.index(3)}, rng);
    return {[=] { return square(sum(a)); }, {a}};
  });
  run("mean", [&]() -> Trial {
    auto a = random_tensor({1 + rng.index(3), 1 + rng.index(3)}, rng);
    return {[=] { return square(mean(a)); }, {a}};
  });
  run("l2_penalty", [&]() -> Trial {
    auto a = random_tensor({1 + rng.index(3), 1 + rng.index(3)}, rng);
    auto b = random_tensor({1 + rng.index(4)}, rng);
    return {[=] { return l2_penalty(std::vector<Tensor>{a, b}, 0.05); }, {a, b}};
  });
  run("binary_cross_entropy", [&]() -> Trial {
    const auto n = 1 + rng.index(6);
    auto logits = random_tensor({n}, rng);
    std::vector<double> targets(n);
    for (auto& t : targets) t = rng.uniform(0, 1);
    return {[=] { return binary_cross_entropy(targets, sigmoid(logits)); }, {logits}};
  });
  run("embedding_lookup", [&]() -> Trial {
    const auto vocab = 3 + rng.index(4), dim = 1 + rng.index(3), n = 1 + rng.index(6);
    auto table = random_tensor({vocab, dim}, rng);
    std::vector<std::int32_t> ids(n);
    for (auto& id : ids) id = static_cast<std::int32_t>(1 + rng.index(vocab - 1));
    auto w = random_tensor({n, dim}, rng, -2, 2, false);
    return {[=] { return weighted_sum(embedding_lookup(table, ids), w); }, {table}};
  });
  run("conv1d", [&]() -> Trial {
    const auto batch = 1 + rng.index(2), seq = 2 + rng.index(4), d = 1 + rng.index(3), d_out = 1 + rng.index(3);
    const auto width = 1 + rng.index(seq);
    auto x = random_tensor({batch * seq, d}, rng);
    auto k = random_tensor({width, d, d_out}, rng);
    auto b = random_tensor({d_out}, rng);
    auto w = random_tensor({batch * seq, d_out}, rng, -2, 2, false);
    return {[=] { return weighted_sum(conv1d(x, k, b, seq), w); }, {x, k, b}};
  });
  auto random_mask = [&](std::size_t batch, std::size_t seq) {
    std::vector<std::uint8_t> mask(batch * seq);
    for (std::size_t b = 0; b < batch; ++b) {
      const auto len = 1 + rng.index(seq);
      for (std::size_t t = 0; t < seq; ++t) mask[b * seq + t] = t < len ? 1 : 0;
    }
    return mask;
  };
  run("max_over_time", [&]() -> Trial {
    const auto batch = 1 + rng.index(3), seq = 1 + rng.index(5), c = 1 + rng.index(4);
    auto x = random_tensor({batch * seq, c}, rng);
    auto mask = random_mask(batch, seq);
    auto w = random_tensor({batch, c}, rng, -2, 2, false);
    return {[=] { return weighted_sum(max_over_time(x, mask, seq), w); }, {x}};
  });
  run("mean_over_time", [&]() -> Trial {
    const auto batch = 1 + rng.index(3), seq = 1 + rng.index(5), c = 1 + rng.index(4);
    auto x = random_tensor({batch * seq, c}, rng);
    auto mask = random_mask(batch, seq);
    auto w = random_tensor({batch, c}, rng, -2, 2, false);
    return {[=] { return weighted_sum(mean_over_time(x, mask, seq), w); }, {x}};
  });
  return reports;
}

}  // namespace ics::testing
