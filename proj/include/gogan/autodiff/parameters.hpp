#pragma once

#include <map>
#include <string>
#include <vector>

#include "gogan/autodiff/tensor.hpp"

namespace gogan::ad {

template <class T>
struct NamedTensor {
  std::string name;
  Tensor<T> tensor;
};

/// Ordered, name-unique collection of tensors. Order is insertion order and
/// is what serialization and optimizers iterate over.
template <class T>
class ParameterList {
 public:
  /// Throws UsageError on a duplicate name.
  Tensor<T>& add(std::string name, Tensor<T> tensor);

  Tensor<T>& at(const std::string& name);
  const Tensor<T>& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t size() const { return items_.size(); }
  std::size_t scalar_count() const;
  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  void zero_grad();
  bool all_finite() const;

 private:
  std::vector<NamedTensor<T>> items_;
  std::map<std::string, std::size_t> index_;
};

extern template class ParameterList<float>;
extern template class ParameterList<double>;

}  // namespace gogan::ad
