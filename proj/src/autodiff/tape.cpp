#include "gogan/autodiff/tape.hpp"

namespace gogan::ad {

namespace {
template <class T>
Tape<T>*& current_tape() {
  thread_local Tape<T>* tape = nullptr;
  return tape;
}
}  // namespace

template <class T>
Tape<T>* active_tape() {
  return current_tape<T>();
}

template <class T>
void Tape<T>::record(std::string op, std::vector<ImplPtr> inputs, ImplPtr output, BackwardFn backward) {
  nodes_.push_back(Node{std::move(op), std::move(inputs), std::move(output), std::move(backward)});
}

template <class T>
void Tape<T>::backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw UsageError("backward: loss must hold exactly one element, got shape " +
                     (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  }
  auto& root = *loss.impl();
  root.ensure_grad();
  root.grad[0] += T(1);

  visits_ = 0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    // Nodes whose output never received gradient are not on a path to the loss.
    if (it->output->grad.empty()) continue;
    it->backward(it->output->grad);
    ++visits_;
  }
}

template <class T>
void Tape<T>::clear() {
  nodes_.clear();
  visits_ = 0;
}

template <class T>
TapeScope<T>::TapeScope(Tape<T>& tape) : previous_(current_tape<T>()) {
  current_tape<T>() = &tape;
}

template <class T>
TapeScope<T>::~TapeScope() {
  current_tape<T>() = previous_;
}

template <class T>
NoGradScope<T>::NoGradScope() : previous_(current_tape<T>()) {
  current_tape<T>() = nullptr;
}

template <class T>
NoGradScope<T>::~NoGradScope() {
  current_tape<T>() = previous_;
}

template Tape<float>* active_tape<float>();
template Tape<double>* active_tape<double>();
template class Tape<float>;
template class Tape<double>;
template class TapeScope<float>;
template class TapeScope<double>;
template class NoGradScope<float>;
template class NoGradScope<double>;

}  // namespace gogan::ad
