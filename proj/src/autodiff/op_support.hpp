#pragma once

#include <initializer_list>
#include <string>
#include <vector>

#include "gogan/autodiff/tape.hpp"
#include "gogan/autodiff/tensor.hpp"

namespace gogan::ad::detail {

template <class T>
bool needs_record(std::initializer_list<const Tensor<T>*> inputs) {
  if (active_tape<T>() == nullptr) return false;
  for (const auto* t : inputs)
    if (t->requires_grad()) return true;
  return false;
}

template <class T>
Tensor<T> make_result(Shape shape, std::vector<T> values, bool tracked) {
  return Tensor<T>(std::move(shape), std::move(values), tracked);
}

// Records `out` on the active tape. Inputs are captured by the tape node so
// the backward closure may hold raw references to them.
template <class T, class Fn>
void record(const char* op, std::initializer_list<const Tensor<T>*> inputs, const Tensor<T>& out, Fn&& fn) {
  std::vector<std::shared_ptr<TensorImpl<T>>> ins;
  ins.reserve(inputs.size());
  for (const auto* t : inputs) ins.push_back(t->impl());
  active_tape<T>()->record(op, std::move(ins), out.impl(), std::forward<Fn>(fn));
}

// Gradient sink for an input, or nullptr when the input does not want one.
template <class T>
T* grad_sink(const std::shared_ptr<TensorImpl<T>>& impl) {
  if (!impl->requires_grad) return nullptr;
  impl->ensure_grad();
  return impl->grad.data();
}

inline void require(bool ok, const std::string& message) {
  if (!ok) throw DimensionError(message);
}

}  // namespace gogan::ad::detail
