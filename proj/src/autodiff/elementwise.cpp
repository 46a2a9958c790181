#include <cmath>

#include <Eigen/Core>

#include "gogan/autodiff/ops.hpp"
#include "op_support.hpp"

namespace gogan::ad {

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Unary elementwise op with derivative expressed through input and output values.
template <class T, class Fwd, class Deriv>
Tensor<T> unary(const char* op, const Tensor<T>& x, Fwd fwd, Deriv deriv) {
  std::vector<T> out(x.numel());
  const auto xs = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(xs[i]);
  const bool tracked = detail::needs_record({&x});
  auto result = detail::make_result<T>(x.shape(), std::move(out), tracked);
  if (tracked) {
    auto xi = x.impl();
    auto yi = result.impl();
    std::weak_ptr<TensorImpl<T>> yw = yi;
    detail::record<T>(op, {&x}, result, [xi, yw, deriv](const std::vector<T>& g) {
      T* gx = detail::grad_sink(xi);
      if (!gx) return;
      auto y = yw.lock();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * deriv(xi->data[i], y->data[i]);
    });
  }
  return result;
}

template <class T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() == b.shape()) return;
  std::size_t axis = 0;
  while (axis < a.rank() && axis < b.rank() && a.shape()[axis] == b.shape()[axis]) ++axis;
  throw DimensionError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()) +
                       " differ at axis " + std::to_string(axis));
}

template <class T, class Fwd, class DA, class DB>
Tensor<T> binary(const char* op, const Tensor<T>& a, const Tensor<T>& b, Fwd fwd, DA da, DB db) {
  require_same_shape(a, b, op);
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(a[i], b[i]);
  const bool tracked = detail::needs_record({&a, &b});
  auto result = detail::make_result<T>(a.shape(), std::move(out), tracked);
  if (tracked) {
    auto ai = a.impl(), bi = b.impl();
    detail::record<T>(op, {&a, &b}, result, [ai, bi, da, db](const std::vector<T>& g) {
      if (T* ga = detail::grad_sink(ai))
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * da(ai->data[i], bi->data[i]);
      if (T* gb = detail::grad_sink(bi))
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * db(ai->data[i], bi->data[i]);
    });
  }
  return result;
}

}  // namespace

template <class T>
Tensor<T> leaky_relu(const Tensor<T>& x, double slope) {
  const T s = static_cast<T>(slope);
  return unary<T>(
      "leaky_relu", x, [s](T v) { return v > T(0) ? v : s * v; }, [s](T v, T) { return v > T(0) ? T(1) : s; });
}

template <class T>
Tensor<T> relu(const Tensor<T>& x) {
  return unary<T>(
      "relu", x, [](T v) { return v > T(0) ? v : T(0); }, [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <class T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return unary<T>(
      "sigmoid", x,
      [](T v) {
        // Split by sign so exp never overflows.
        if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
        const T e = std::exp(v);
        return e / (T(1) + e);
      },
      [](T, T y) { return y * (T(1) - y); });
}

template <class T>
Tensor<T> tanh(const Tensor<T>& x) {
  return unary<T>(
      "tanh", x, [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

template <class T>
Tensor<T> abs(const Tensor<T>& x) {
  return unary<T>(
      "abs", x, [](T v) { return std::abs(v); },
      [](T v, T) { return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0)); });
}

template <class T>
Tensor<T> log(const Tensor<T>& x) {
  for (std::size_t i = 0; i < x.numel(); ++i) {
    if (!(x[i] > T(0))) {
      throw DomainError("log: argument must be strictly positive, found " + std::to_string(x[i]) + " at flat index " +
                        std::to_string(i));
    }
  }
  return unary<T>(
      "log", x, [](T v) { return std::log(v); }, [](T v, T) { return T(1) / v; });
}

template <class T>
Tensor<T> clamp(const Tensor<T>& x, double lo, double hi) {
  const T l = static_cast<T>(lo), h = static_cast<T>(hi);
  return unary<T>(
      "clamp", x, [l, h](T v) { return v < l ? l : (v > h ? h : v); },
      [l, h](T v, T) { return (v >= l && v <= h) ? T(1) : T(0); });
}

template <class T>
Tensor<T> affine(const Tensor<T>& x, double alpha, double beta) {
  const T a = static_cast<T>(alpha), b = static_cast<T>(beta);
  return unary<T>(
      "affine", x, [a, b](T v) { return a * v + b; }, [a](T, T) { return a; });
}

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary<T>(
      "add", a, b, [](T u, T v) { return u + v; }, [](T, T) { return T(1); }, [](T, T) { return T(1); });
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary<T>(
      "sub", a, b, [](T u, T v) { return u - v; }, [](T, T) { return T(1); }, [](T, T) { return T(-1); });
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary<T>(
      "mul", a, b, [](T u, T v) { return u * v; }, [](T, T v) { return v; }, [](T u, T) { return u; });
}

template <class T>
Tensor<T> sum(const Tensor<T>& x) {
  double s = 0.0;
  for (T v : x.data()) s += v;
  const bool tracked = detail::needs_record({&x});
  auto result = detail::make_result<T>({1}, {static_cast<T>(s)}, tracked);
  if (tracked) {
    auto xi = x.impl();
    detail::record<T>("sum", {&x}, result, [xi](const std::vector<T>& g) {
      if (T* gx = detail::grad_sink(xi))
        for (std::size_t i = 0; i < xi->data.size(); ++i) gx[i] += g[0];
    });
  }
  return result;
}

template <class T>
Tensor<T> mean(const Tensor<T>& x) {
  detail::require(x.numel() > 0, "mean: empty tensor");
  double s = 0.0;
  for (T v : x.data()) s += v;
  const double n = static_cast<double>(x.numel());
  const bool tracked = detail::needs_record({&x});
  auto result = detail::make_result<T>({1}, {static_cast<T>(s / n)}, tracked);
  if (tracked) {
    auto xi = x.impl();
    detail::record<T>("mean", {&x}, result, [xi, n](const std::vector<T>& g) {
      if (T* gx = detail::grad_sink(xi)) {
        const T share = static_cast<T>(g[0] / n);
        for (std::size_t i = 0; i < xi->data.size(); ++i) gx[i] += share;
      }
    });
  }
  return result;
}

template <class T>
Tensor<T> dropout(const Tensor<T>& x, double rate, bool training, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw DomainError("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
  if (!training || rate == 0.0) return x;
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<T> mask(x.numel());
  std::vector<T> out(x.numel());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = uniform01(rng) < rate ? T(0) : keep_scale;
    out[i] = x[i] * mask[i];
  }
  const bool tracked = detail::needs_record({&x});
  auto result = detail::make_result<T>(x.shape(), std::move(out), tracked);
  if (tracked) {
    auto xi = x.impl();
    detail::record<T>("dropout", {&x}, result, [xi, mask = std::move(mask)](const std::vector<T>& g) {
      if (T* gx = detail::grad_sink(xi))
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
    });
  }
  return result;
}

template <class T>
Tensor<T> dense(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
  detail::require(input.rank() == 2, "dense: input must be rank 2 [N,K], got " + shape_str(input.shape()));
  detail::require(weight.rank() == 2, "dense: weight must be rank 2 [K,M], got " + shape_str(weight.shape()));
  const auto N = input.dim(0), K = input.dim(1), M = weight.dim(1);
  detail::require(weight.dim(0) == K, "dense: inner dimension mismatch: input axis 1 is " + std::to_string(K) +
                                          ", weight axis 0 is " + std::to_string(weight.dim(0)));
  detail::require(bias.numel() == M, "dense: bias length " + std::to_string(bias.numel()) +
                                         " does not match weight axis 1 (" + std::to_string(M) + ")");
  std::vector<T> out(N * M);
  Eigen::Map<const RowMat<T>> x(input.data().data(), N, K);
  Eigen::Map<const RowMat<T>> w(weight.data().data(), K, M);
  Eigen::Map<RowMat<T>> o(out.data(), N, M);
  o.noalias() = x * w;
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t m = 0; m < M; ++m) o(n, m) += bias[m];

  const bool tracked = detail::needs_record({&input, &weight, &bias});
  auto result = detail::make_result<T>({N, M}, std::move(out), tracked);
  if (tracked) {
    auto xi = input.impl(), wi = weight.impl(), bi = bias.impl();
    detail::record<T>("dense", {&input, &weight, &bias}, result, [xi, wi, bi, N, K, M](const std::vector<T>& gv) {
      Eigen::Map<const RowMat<T>> g(gv.data(), N, M);
      if (T* gx = detail::grad_sink(xi)) {
        Eigen::Map<const RowMat<T>> w(wi->data.data(), K, M);
        Eigen::Map<RowMat<T>>(gx, N, K).noalias() += g * w.transpose();
      }
      if (T* gw = detail::grad_sink(wi)) {
        Eigen::Map<const RowMat<T>> x(xi->data.data(), N, K);
        Eigen::Map<RowMat<T>>(gw, K, M).noalias() += x.transpose() * g;
      }
      if (T* gb = detail::grad_sink(bi))
        for (std::size_t n = 0; n < N; ++n)
          for (std::size_t m = 0; m < M; ++m) gb[m] += g(n, m);
    });
  }
  return result;
}

template <class T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require(a.rank() >= 2 && a.rank() == b.rank(),
                  "concat_channels: ranks differ or lack a channel axis: " + shape_str(a.shape()) + " vs " +
                      shape_str(b.shape()));
  for (std::size_t ax = 0; ax < a.rank(); ++ax) {
    if (ax == 1) continue;
    detail::require(a.dim(ax) == b.dim(ax), "concat_channels: axis " + std::to_string(ax) + " differs: " +
                                                shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  const auto N = a.dim(0), Ca = a.dim(1), Cb = b.dim(1);
  const auto inner = a.numel() / (N * Ca);
  std::vector<T> out;
  out.reserve(a.numel() + b.numel());
  for (std::size_t n = 0; n < N; ++n) {
    out.insert(out.end(), a.data().begin() + n * Ca * inner, a.data().begin() + (n + 1) * Ca * inner);
    out.insert(out.end(), b.data().begin() + n * Cb * inner, b.data().begin() + (n + 1) * Cb * inner);
  }
  Shape shape = a.shape();
  shape[1] = Ca + Cb;
  const bool tracked = detail::needs_record({&a, &b});
  auto result = detail::make_result<T>(std::move(shape), std::move(out), tracked);
  if (tracked) {
    auto ai = a.impl(), bi = b.impl();
    detail::record<T>("concat_channels", {&a, &b}, result, [ai, bi, N, Ca, Cb, inner](const std::vector<T>& g) {
      T* ga = detail::grad_sink(ai);
      T* gb = detail::grad_sink(bi);
      for (std::size_t n = 0; n < N; ++n) {
        const T* src = g.data() + n * (Ca + Cb) * inner;
        if (ga)
          for (std::size_t i = 0; i < Ca * inner; ++i) ga[n * Ca * inner + i] += src[i];
        if (gb)
          for (std::size_t i = 0; i < Cb * inner; ++i) gb[n * Cb * inner + i] += src[Ca * inner + i];
      }
    });
  }
  return result;
}

template <class T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  detail::require(numel(shape) == x.numel(),
                  "reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  const bool tracked = detail::needs_record({&x});
  auto result = detail::make_result<T>(std::move(shape), x.values(), tracked);
  if (tracked) {
    auto xi = x.impl();
    detail::record<T>("reshape", {&x}, result, [xi](const std::vector<T>& g) {
      if (T* gx = detail::grad_sink(xi))
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
  }
  return result;
}

#define GOGAN_INSTANTIATE_ELEMENTWISE(T)                                                  \
  template Tensor<T> leaky_relu<T>(const Tensor<T>&, double);                             \
  template Tensor<T> relu<T>(const Tensor<T>&);                                           \
  template Tensor<T> sigmoid<T>(const Tensor<T>&);                                        \
  template Tensor<T> tanh<T>(const Tensor<T>&);                                           \
  template Tensor<T> abs<T>(const Tensor<T>&);                                            \
  template Tensor<T> log<T>(const Tensor<T>&);                                            \
  template Tensor<T> clamp<T>(const Tensor<T>&, double, double);                          \
  template Tensor<T> affine<T>(const Tensor<T>&, double, double);                         \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> sub<T>(const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> sum<T>(const Tensor<T>&);                                            \
  template Tensor<T> mean<T>(const Tensor<T>&);                                           \
  template Tensor<T> dropout<T>(const Tensor<T>&, double, bool, Rng&);                    \
  template Tensor<T> dense<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);      \
  template Tensor<T> concat_channels<T>(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> reshape<T>(const Tensor<T>&, Shape);

GOGAN_INSTANTIATE_ELEMENTWISE(float)
GOGAN_INSTANTIATE_ELEMENTWISE(double)

}  // namespace gogan::ad
