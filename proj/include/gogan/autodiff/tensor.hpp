#pragma once

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gogan::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Raised when operand shapes do not line up. The message names the axis.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for values outside an operation's mathematical domain (log of 0, NaN gradients).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when the API is used out of contract (non-scalar loss, missing tape, ...).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

template <class T>
struct TensorImpl {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until a gradient reaches this tensor
  bool requires_grad = false;

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), T(0));
  }
};

/// Dense row-major tensor. Copies share storage; differentiable ops always
/// allocate a fresh output, so a tensor's values never change once it has
/// been consumed by the tape. Leaf parameters are the exception: the
/// optimizer writes them in place between steps.
template <class T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor of(Shape shape, std::initializer_list<T> values, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t dim(std::size_t axis) const;
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t numel() const { return impl_->data.size(); }

  std::span<const T> data() const { return impl_->data; }
  // Writable access is meant for leaves (parameters, freshly built inputs).
  std::span<T> mutable_data() { return impl_->data; }
  const std::vector<T>& values() const { return impl_->data; }
  T operator[](std::size_t i) const { return impl_->data[i]; }
  T item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  Tensor& set_requires_grad(bool on);

  // Gradient buffer; zero-filled if nothing has been accumulated yet.
  std::span<const T> grad() const;
  bool has_grad() const { return !impl_->grad.empty(); }
  void zero_grad();

  /// Value copy cut off from the tape.
  Tensor detach() const;
  /// Deep copy keeping requires_grad.
  Tensor clone() const;

  const std::shared_ptr<TensorImpl<T>>& impl() const { return impl_; }
  static Tensor wrap(std::shared_ptr<TensorImpl<T>> impl);

 private:
  std::shared_ptr<TensorImpl<T>> impl_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace gogan::ad
