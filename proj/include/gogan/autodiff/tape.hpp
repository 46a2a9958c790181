#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gogan/autodiff/tensor.hpp"

namespace gogan::ad {

/// Records differentiable operations in execution order. Nodes are appended
/// as ops run, so the record is already topologically sorted; backward()
/// walks it once in reverse.
template <class T>
class Tape {
 public:
  using ImplPtr = std::shared_ptr<TensorImpl<T>>;
  using BackwardFn = std::function<void(const std::vector<T>& grad_out)>;

  struct Node {
    std::string op;
    std::vector<ImplPtr> inputs;
    ImplPtr output;
    BackwardFn backward;
  };

  void record(std::string op, std::vector<ImplPtr> inputs, ImplPtr output, BackwardFn backward);

  /// Seeds d(loss)/d(loss)=1 and propagates. Gradients accumulate into every
  /// reachable tensor with requires_grad set.
  void backward(const Tensor<T>& loss);

  std::size_t size() const { return nodes_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  // Number of node visits performed by the most recent backward().
  std::size_t last_visit_count() const { return visits_; }
  void clear();

 private:
  std::vector<Node> nodes_;
  std::size_t visits_ = 0;
};

/// The tape ops record into on this thread, or nullptr when recording is off.
template <class T>
Tape<T>* active_tape();

/// Activates a tape for the current thread for the lifetime of the guard.
template <class T>
class TapeScope {
 public:
  explicit TapeScope(Tape<T>& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape<T>* previous_;
};

/// Suspends recording (inference, target-side forwards).
template <class T>
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape<T>* previous_;
};

extern template class Tape<float>;
extern template class Tape<double>;
extern template class TapeScope<float>;
extern template class TapeScope<double>;
extern template class NoGradScope<float>;
extern template class NoGradScope<double>;

}  // namespace gogan::ad
