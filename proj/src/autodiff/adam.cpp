#include "gogan/autodiff/adam.hpp"

#include <cmath>

namespace gogan::ad {

template <class T>
void adam_step(ParameterList<T>& params, AdamState<T>& state) {
  const auto& o = state.options;
  if (!(o.lr > 0.0)) throw UsageError("adam_step: learning rate must be positive");

  for (auto& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (T g : p.tensor.grad()) {
      if (!std::isfinite(g)) throw DomainError("adam_step: non-finite gradient in parameter '" + p.name + "'");
    }
  }

  ++state.step;
  const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));

  for (auto& p : params) {
    auto& mom = state.moments[p.name];
    const std::size_t n = p.tensor.numel();
    if (mom.m.size() != n) {
      mom.m.assign(n, T(0));
      mom.v.assign(n, T(0));
    }
    if (!p.tensor.has_grad()) continue;
    auto g = p.tensor.grad();
    auto w = p.tensor.mutable_data();
    for (std::size_t i = 0; i < n; ++i) {
      const double gi = g[i];
      const double m = o.beta1 * mom.m[i] + (1.0 - o.beta1) * gi;
      const double v = o.beta2 * mom.v[i] + (1.0 - o.beta2) * gi * gi;
      mom.m[i] = static_cast<T>(m);
      mom.v[i] = static_cast<T>(v);
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      w[i] = static_cast<T>(w[i] - o.lr * mhat / (std::sqrt(vhat) + o.eps));
    }
  }
}

template void adam_step<float>(ParameterList<float>&, AdamState<float>&);
template void adam_step<double>(ParameterList<double>&, AdamState<double>&);

}  // namespace gogan::ad
