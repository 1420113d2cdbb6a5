#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "ics/numerics/tensor.hpp"

namespace ics::nn {

// Ordered record of executed operations for reverse-mode differentiation.
//
// Operations record themselves on the tape installed for the current thread
// (see Tape::Scope). With no tape installed, ops run forward-only, which is
// the eval-mode inference path.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // `backward` reads output's gradient and accumulates into the op inputs.
  void record(const Tensor& output, std::function<void()> backward);

  // Seeds d(loss)/d(loss) = 1 and runs recorded ops in exact reverse order.
  void backward(const Tensor& loss);

  // Releases every recorded node. Tensors produced before the clear can no
  // longer be back-propagated.
  void clear();

  std::size_t size() const noexcept { return nodes_.size(); }
  std::uint64_t generation() const noexcept { return generation_; }

  static Tape* active() noexcept;

  // Installs a tape as the active one for this thread for the scope lifetime.
  class Scope {
   public:
    explicit Scope(Tape& tape);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape* previous_;
  };

 private:
  struct Node {
    Tensor output;
    std::function<void()> backward;
  };
  std::vector<Node> nodes_;
  std::uint64_t generation_ = 1;
};

// Suspends recording on this thread (eval-mode scoring inside a training loop).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  Tape* previous_;
};

}  // namespace ics::nn
