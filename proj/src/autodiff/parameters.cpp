#include "gogan/autodiff/parameters.hpp"

#include <cmath>

namespace gogan::ad {

template <class T>
Tensor<T>& ParameterList<T>::add(std::string name, Tensor<T> tensor) {
  if (index_.count(name)) throw UsageError("duplicate parameter name '" + name + "'");
  index_.emplace(name, items_.size());
  items_.push_back({std::move(name), std::move(tensor)});
  return items_.back().tensor;
}

template <class T>
Tensor<T>& ParameterList<T>::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("unknown parameter '" + name + "'");
  return items_[it->second].tensor;
}

template <class T>
const Tensor<T>& ParameterList<T>::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("unknown parameter '" + name + "'");
  return items_[it->second].tensor;
}

template <class T>
std::size_t ParameterList<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : items_) n += p.tensor.numel();
  return n;
}

template <class T>
void ParameterList<T>::zero_grad() {
  for (auto& p : items_) p.tensor.zero_grad();
}

template <class T>
bool ParameterList<T>::all_finite() const {
  for (const auto& p : items_)
    for (T v : p.tensor.data())
      if (!std::isfinite(v)) return false;
  return true;
}

template class ParameterList<float>;
template class ParameterList<double>;

}  // namespace gogan::ad
