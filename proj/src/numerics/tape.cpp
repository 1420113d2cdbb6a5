#include "ics/numerics/tape.hpp"

#include <algorithm>

#include "ics/errors.hpp"

namespace ics::nn {
namespace {
thread_local Tape* active_tape = nullptr;
}

Tape* Tape::active() noexcept { return active_tape; }

Tape::Scope::Scope(Tape& tape) : previous_(active_tape) { active_tape = &tape; }
Tape::Scope::~Scope() { active_tape = previous_; }

NoGradGuard::NoGradGuard() : previous_(active_tape) { active_tape = nullptr; }
NoGradGuard::~NoGradGuard() { active_tape = previous_; }

void Tape::record(const Tensor& output, std::function<void()> backward) {
  output.impl_->requires_grad = true;
  output.impl_->producer = this;
  output.impl_->generation = generation_;
  nodes_.push_back({output, std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw DimensionError("backward needs a scalar loss");
  }
  if (loss.impl_->producer != this) {
    throw TapeError("loss was not produced on this tape");
  }
  if (loss.impl_->generation != generation_ || nodes_.empty()) {
    throw TapeError("tape was cleared after the loss was computed; recompute the forward pass");
  }
  Tensor seed = loss;
  seed.grad_accumulator()[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->output.has_grad()) it->backward();
  }
}

void Tape::clear() {
  nodes_.clear();
  nodes_.shrink_to_fit();
  ++generation_;
}

}  // namespace ics::nn
