#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gogan/autodiff/parameters.hpp"

namespace gogan::ad {

struct AdamOptions {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <class T>
struct AdamMoments {
  std::vector<T> m;
  std::vector<T> v;
};

template <class T>
struct AdamState {
  AdamOptions options;
  std::int64_t step = 0;
  // Keyed by parameter name; created lazily with the parameter's size.
  std::map<std::string, AdamMoments<T>> moments;
};

/// One bias-corrected Adam update over every parameter in `params` using the
/// gradients currently held by the tensors. Throws DomainError naming the
/// first parameter whose gradient contains a NaN/Inf, before touching any value.
template <class T>
void adam_step(ParameterList<T>& params, AdamState<T>& state);

}  // namespace gogan::ad
