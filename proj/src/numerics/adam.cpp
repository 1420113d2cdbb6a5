#include "ics/numerics/adam.hpp"

#include <cmath>

#include "ics/errors.hpp"

namespace ics::nn {

LearningRateSchedule LearningRateSchedule::constant(double rate) {
  LearningRateSchedule s;
  s.kind = Kind::kConstant;
  s.initial = rate;
  return s;
}

LearningRateSchedule LearningRateSchedule::exponential(double initial, double decay_rate, std::size_t decay_steps) {
  if (decay_steps == 0) throw ConfigError("exponential schedule needs decay_steps > 0");
  LearningRateSchedule s;
  s.kind = Kind::kExponential;
  s.initial = initial;
  s.decay_rate = decay_rate;
  s.decay_steps = decay_steps;
  return s;
}

double LearningRateSchedule::rate_at(std::size_t step) const {
  if (kind == Kind::kConstant) return initial;
  if (step % decay_steps == 0) {
    // Integer exponent keeps multiples of the decay step exact.
    double rate = initial;
    for (std::size_t i = 0; i < step / decay_steps; ++i) rate *= decay_rate;
    return rate;
  }
  return initial * std::pow(decay_rate, static_cast<double>(step) / static_cast<double>(decay_steps));
}

AdamState::AdamState(std::span<const Parameter> params, AdamOptions opts) : options(opts) {
  first_moment.reserve(params.size());
  second_moment.reserve(params.size());
  for (const auto& p : params) {
    first_moment.emplace_back(p.tensor.size(), 0.0);
    second_moment.emplace_back(p.tensor.size(), 0.0);
  }
}

void adam_step(std::span<const Parameter> params, AdamState& state) {
  if (params.size() != state.first_moment.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) + " parameters but state tracks " +
                         std::to_string(state.first_moment.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].frozen) continue;
    if (!params[i].tensor.has_grad()) {
      throw MissingGradientError("adam_step: parameter '" + params[i].name +
                                 "' has no gradient; call backward before stepping");
    }
    if (state.first_moment[i].size() != params[i].tensor.size()) {
      throw DimensionError("adam_step: moment size mismatch for '" + params[i].name + "'");
    }
  }

  const double lr = state.options.schedule.rate_at(state.step);
  ++state.step;
  const double b1 = state.options.beta1, b2 = state.options.beta2, eps = state.options.epsilon;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(state.step));

  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].frozen) continue;
    Tensor theta = params[i].tensor;
    auto values = theta.mutable_values();
    auto grad = theta.grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < values.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * grad[j];
      v[j] = b2 * v[j] + (1.0 - b2) * grad[j] * grad[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      values[j] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

void zero_grad(std::span<const Parameter> params) {
  for (const auto& p : params) {
    Tensor t = p.tensor;
    t.clear_grad();
  }
}

}  // namespace ics::nn
