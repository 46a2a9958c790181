#include "gogan/autodiff/tensor.hpp"

#include <algorithm>
#include <sstream>

namespace gogan::ad {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

template <class T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values, bool requires_grad) {
  if (ad::numel(shape) != values.size()) {
    throw DimensionError("tensor: shape " + shape_str(shape) + " holds " + std::to_string(ad::numel(shape)) +
                         " elements but " + std::to_string(values.size()) + " were given");
  }
  impl_ = std::make_shared<TensorImpl<T>>();
  impl_->shape = std::move(shape);
  impl_->data = std::move(values);
  impl_->requires_grad = requires_grad;
}

template <class T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <class T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  const auto n = ad::numel(shape);
  return Tensor(std::move(shape), std::vector<T>(n, value), requires_grad);
}

template <class T>
Tensor<T> Tensor<T>::of(Shape shape, std::initializer_list<T> values, bool requires_grad) {
  return Tensor(std::move(shape), std::vector<T>(values), requires_grad);
}

template <class T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return Tensor(Shape{1}, std::vector<T>{value}, requires_grad);
}

template <class T>
std::size_t Tensor<T>::dim(std::size_t axis) const {
  if (axis >= impl_->shape.size()) {
    throw DimensionError("tensor: axis " + std::to_string(axis) + " out of range for shape " +
                         shape_str(impl_->shape));
  }
  return impl_->shape[axis];
}

template <class T>
T Tensor<T>::item() const {
  if (impl_->data.size() != 1) {
    throw UsageError("item(): tensor of shape " + shape_str(impl_->shape) + " is not a scalar");
  }
  return impl_->data[0];
}

template <class T>
Tensor<T>& Tensor<T>::set_requires_grad(bool on) {
  impl_->requires_grad = on;
  if (!on) impl_->grad.clear();
  return *this;
}

template <class T>
std::span<const T> Tensor<T>::grad() const {
  impl_->ensure_grad();
  return impl_->grad;
}

template <class T>
void Tensor<T>::zero_grad() {
  if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), T(0));
}

template <class T>
Tensor<T> Tensor<T>::detach() const {
  return Tensor(impl_->shape, impl_->data, false);
}

template <class T>
Tensor<T> Tensor<T>::clone() const {
  return Tensor(impl_->shape, impl_->data, impl_->requires_grad);
}

template <class T>
Tensor<T> Tensor<T>::wrap(std::shared_ptr<TensorImpl<T>> impl) {
  Tensor t;
  t.impl_ = std::move(impl);
  return t;
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace gogan::ad
