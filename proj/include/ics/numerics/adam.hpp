#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ics/numerics/tensor.hpp"

namespace ics::nn {

struct LearningRateSchedule {
  enum class Kind { kConstant, kExponential };

  Kind kind = Kind::kConstant;
  double initial = 1e-4;
  double decay_rate = 0.95;
  std::size_t decay_steps = 10000;

  static LearningRateSchedule constant(double rate);
  static LearningRateSchedule exponential(double initial, double decay_rate, std::size_t decay_steps);

  // initial * decay_rate^(step / decay_steps) for the exponential kind
  // (continuous exponent; exact at multiples of decay_steps).
  double rate_at(std::size_t step) const;
};

struct AdamOptions {
  LearningRateSchedule schedule = LearningRateSchedule::constant(1e-4);
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct Parameter {
  std::string name;
  Tensor tensor;
  bool frozen = false;
};

struct AdamState {
  AdamOptions options;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  // Number of completed updates; the schedule is consulted at this count.
  std::size_t step = 0;

  AdamState() = default;
  AdamState(std::span<const Parameter> params, AdamOptions opts);
  double current_learning_rate() const { return options.schedule.rate_at(step); }
};

// One bias-corrected Adam update over every non-frozen parameter. Throws
// MissingGradientError if a trainable parameter has no gradient buffer, and
// DimensionError if the parameter list does not match the state.
void adam_step(std::span<const Parameter> params, AdamState& state);

void zero_grad(std::span<const Parameter> params);

}  // namespace ics::nn
