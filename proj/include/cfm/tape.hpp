#pragma once

#include <functional>
#include <initializer_list>
#include <vector>

#include "cfm/tensor.hpp"

namespace cfm {

// Reverse-mode tape. Operations are recorded in execution order, which is a
// topological order of the graph; backward() replays them once, in reverse.
// Gradients accumulate additively; resetting them between steps is the
// caller's job (see Adam::zero_grad).
template <typename T>
class Tape {
 public:
  void record(std::function<void()> backward_fn) {
    nodes_.push_back(std::move(backward_fn));
  }

  void backward(const Tensor<T>& loss) {
    if (!loss.defined() || loss.numel() != 1)
      throw ShapeError("Tape::backward: loss must be a scalar tensor");
    if (loss.requires_grad()) loss.impl()->grad[0] += T(1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
  }

  void clear() { nodes_.clear(); }
  size_t size() const { return nodes_.size(); }

  static Tape*& active() {
    thread_local Tape* current = nullptr;
    return current;
  }

 private:
  std::vector<std::function<void()>> nodes_;
};

// Scoped activation; ops record only while a tape is active.
template <typename T>
class TapeScope {
 public:
  explicit TapeScope(Tape<T>& tape) : prev_(Tape<T>::active()) {
    Tape<T>::active() = &tape;
  }
  ~TapeScope() { Tape<T>::active() = prev_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape<T>* prev_;
};

template <typename T>
inline bool tracing(std::initializer_list<const Tensor<T>*> inputs) {
  if (Tape<T>::active() == nullptr) return false;
  for (const Tensor<T>* t : inputs)
    if (t && t->defined() && t->requires_grad()) return true;
  return false;
}

// Marks `out` as a graph intermediate and registers its backward function.
template <typename T>
inline void record_op(Tensor<T>& out, std::function<void()> backward_fn) {
  out.set_requires_grad(true);
  Tape<T>::active()->record(std::move(backward_fn));
}

}  // namespace cfm
