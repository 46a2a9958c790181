#include <cmath>

#include "gogan/autodiff/ops.hpp"
#include "op_support.hpp"

namespace gogan::ad {

namespace {

// NCHW with the spatial axes folded together.
struct Layout {
  std::size_t N, C, HW;
};

template <class T>
void check_norm_inputs(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, const char* op) {
  detail::require(x.rank() == 4, std::string(op) + ": input must be rank 4 [N,C,H,W], got " + shape_str(x.shape()));
  const auto C = x.dim(1);
  detail::require(gamma.numel() == C, std::string(op) + ": gamma length does not match channel axis (1)");
  detail::require(beta.numel() == C, std::string(op) + ": beta length does not match channel axis (1)");
}

// Affine-normalize with per-(n,c) mean and inverse std and record the
// backward rule. `batch_stats` selects whether mean/invstd depend on x
// (training) or are constants (inference).
template <class T>
Tensor<T> normalize(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, const Layout& L,
                    std::vector<double> mean, std::vector<double> invstd, bool per_instance, bool batch_stats,
                    const char* op) {
  const auto stat = [&](std::size_t n, std::size_t c) { return per_instance ? n * L.C + c : c; };
  std::vector<T> xhat(x.numel());
  std::vector<T> out(x.numel());
  for (std::size_t n = 0; n < L.N; ++n)
    for (std::size_t c = 0; c < L.C; ++c) {
      const auto s = stat(n, c);
      const auto base = (n * L.C + c) * L.HW;
      const double g = gamma[c], b = beta[c];
      for (std::size_t i = 0; i < L.HW; ++i) {
        const double h = (x[base + i] - mean[s]) * invstd[s];
        xhat[base + i] = static_cast<T>(h);
        out[base + i] = static_cast<T>(g * h + b);
      }
    }

  const bool tracked = detail::needs_record({&x, &gamma, &beta});
  auto result = detail::make_result<T>(x.shape(), std::move(out), tracked);
  if (!tracked) return result;

  auto xi = x.impl(), gi = gamma.impl(), bi = beta.impl();
  detail::record<T>(op, {&x, &gamma, &beta}, result,
                    [xi, gi, bi, L, xhat = std::move(xhat), invstd = std::move(invstd), per_instance,
                     batch_stats](const std::vector<T>& g) {
                      T* gx = detail::grad_sink(xi);
                      T* gg = detail::grad_sink(gi);
                      T* gb = detail::grad_sink(bi);
                      const std::size_t groups = per_instance ? L.N * L.C : L.C;
                      // Per-group sums of dy and dy*xhat.
                      std::vector<double> sum_dy(groups, 0.0), sum_dy_xhat(groups, 0.0);
                      std::vector<double> chan_dy(L.C, 0.0), chan_dy_xhat(L.C, 0.0);
                      for (std::size_t n = 0; n < L.N; ++n)
                        for (std::size_t c = 0; c < L.C; ++c) {
                          const auto s = per_instance ? n * L.C + c : c;
                          const auto base = (n * L.C + c) * L.HW;
                          double a = 0.0, b = 0.0;
                          for (std::size_t i = 0; i < L.HW; ++i) {
                            a += g[base + i];
                            b += g[base + i] * xhat[base + i];
                          }
                          sum_dy[s] += a;
                          sum_dy_xhat[s] += b;
                          chan_dy[c] += a;
                          chan_dy_xhat[c] += b;
                        }
                      if (gg)
                        for (std::size_t c = 0; c < L.C; ++c) gg[c] += static_cast<T>(chan_dy_xhat[c]);
                      if (gb)
                        for (std::size_t c = 0; c < L.C; ++c) gb[c] += static_cast<T>(chan_dy[c]);
                      if (!gx) return;
                      const double count = static_cast<double>(per_instance ? L.HW : L.N * L.HW);
                      for (std::size_t n = 0; n < L.N; ++n)
                        for (std::size_t c = 0; c < L.C; ++c) {
                          const auto s = per_instance ? n * L.C + c : c;
                          const auto base = (n * L.C + c) * L.HW;
                          const double gam = gi->data[c];
                          const double k = gam * invstd[s];
                          if (!batch_stats) {
                            for (std::size_t i = 0; i < L.HW; ++i) gx[base + i] += static_cast<T>(k * g[base + i]);
                            continue;
                          }
                          const double m_dy = sum_dy[s] / count;
                          const double m_dyx = sum_dy_xhat[s] / count;
                          for (std::size_t i = 0; i < L.HW; ++i)
                            gx[base + i] += static_cast<T>(k * (g[base + i] - m_dy - xhat[base + i] * m_dyx));
                        }
                    });
  return result;
}

template <class T>
void fold_running(RunningStats<T>& running, std::size_t C, const std::vector<double>& mean,
                  const std::vector<double>& var_unbiased, double momentum) {
  if (running.mean.size() != C) running.mean.assign(C, T(0));
  if (running.var.size() != C) running.var.assign(C, T(1));
  for (std::size_t c = 0; c < C; ++c) {
    running.mean[c] = static_cast<T>((1.0 - momentum) * running.mean[c] + momentum * mean[c]);
    running.var[c] = static_cast<T>((1.0 - momentum) * running.var[c] + momentum * var_unbiased[c]);
  }
}

}  // namespace

template <class T>
Tensor<T> batchnorm2d(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta, bool training,
                      RunningStats<T>& running, NormOptions opts) {
  check_norm_inputs(input, gamma, beta, "batchnorm2d");
  const Layout L{input.dim(0), input.dim(1), input.dim(2) * input.dim(3)};
  std::vector<double> mean(L.C, 0.0), invstd(L.C, 0.0);

  if (!training) {
    detail::require(running.mean.size() == L.C && running.var.size() == L.C,
                    "batchnorm2d: running statistics do not match channel axis (1)");
    for (std::size_t c = 0; c < L.C; ++c) {
      mean[c] = running.mean[c];
      invstd[c] = 1.0 / std::sqrt(static_cast<double>(running.var[c]) + opts.eps);
    }
    return normalize(input, gamma, beta, L, std::move(mean), std::move(invstd), false, false, "batchnorm2d");
  }

  if (L.N < 2) {
    throw DimensionError("batchnorm2d: training mode needs batch axis (0) >= 2 for a defined batch variance, got " +
                         std::to_string(L.N) + "; use instance_norm2d for single-sample batches");
  }
  const double count = static_cast<double>(L.N * L.HW);
  std::vector<double> var(L.C, 0.0), var_unbiased(L.C, 0.0);
  for (std::size_t c = 0; c < L.C; ++c) {
    double s = 0.0;
    for (std::size_t n = 0; n < L.N; ++n) {
      const T* p = input.data().data() + (n * L.C + c) * L.HW;
      for (std::size_t i = 0; i < L.HW; ++i) s += p[i];
    }
    mean[c] = s / count;
    double q = 0.0;
    for (std::size_t n = 0; n < L.N; ++n) {
      const T* p = input.data().data() + (n * L.C + c) * L.HW;
      for (std::size_t i = 0; i < L.HW; ++i) q += (p[i] - mean[c]) * (p[i] - mean[c]);
    }
    var[c] = q / count;
    var_unbiased[c] = q / (count - 1.0);
    invstd[c] = 1.0 / std::sqrt(var[c] + opts.eps);
  }
  fold_running(running, L.C, mean, var_unbiased, opts.momentum);
  return normalize(input, gamma, beta, L, std::move(mean), std::move(invstd), false, true, "batchnorm2d");
}

template <class T>
Tensor<T> instance_norm2d(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta, NormOptions opts,
                          RunningStats<T>* running) {
  check_norm_inputs(input, gamma, beta, "instance_norm2d");
  const Layout L{input.dim(0), input.dim(1), input.dim(2) * input.dim(3)};
  const double count = static_cast<double>(L.HW);
  std::vector<double> mean(L.N * L.C), invstd(L.N * L.C);
  std::vector<double> chan_mean(L.C, 0.0), chan_var(L.C, 0.0);
  for (std::size_t n = 0; n < L.N; ++n)
    for (std::size_t c = 0; c < L.C; ++c) {
      const T* p = input.data().data() + (n * L.C + c) * L.HW;
      double s = 0.0;
      for (std::size_t i = 0; i < L.HW; ++i) s += p[i];
      const double m = s / count;
      double q = 0.0;
      for (std::size_t i = 0; i < L.HW; ++i) q += (p[i] - m) * (p[i] - m);
      mean[n * L.C + c] = m;
      invstd[n * L.C + c] = 1.0 / std::sqrt(q / count + opts.eps);
      chan_mean[c] += m / static_cast<double>(L.N);
      chan_var[c] += (L.HW > 1 ? q / (count - 1.0) : 0.0) / static_cast<double>(L.N);
    }
  if (running) fold_running(*running, L.C, chan_mean, chan_var, opts.momentum);
  return normalize(input, gamma, beta, L, std::move(mean), std::move(invstd), true, true, "instance_norm2d");
}

template Tensor<float> batchnorm2d<float>(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&, bool,
                                          RunningStats<float>&, NormOptions);
template Tensor<double> batchnorm2d<double>(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&, bool,
                                            RunningStats<double>&, NormOptions);
template Tensor<float> instance_norm2d<float>(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&,
                                              NormOptions, RunningStats<float>*);
template Tensor<double> instance_norm2d<double>(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&,
                                                NormOptions, RunningStats<double>*);

}  // namespace gogan::ad
