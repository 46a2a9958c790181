#pragma once

#include <vector>

#include "gogan/autodiff/random.hpp"
#include "gogan/autodiff/tensor.hpp"

// Differentiable primitives. Every op records a node on the active tape when
// at least one input requires a gradient; otherwise it is a plain kernel.
// Image tensors are NCHW, row-major.

namespace gogan::ad {

struct Conv2dOptions {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

// input [N,C,H,W], kernel [F,C,kh,kw] -> [N,F,H',W'],
// H' = (H + 2*padding - kh) / stride + 1.
template <class T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, Conv2dOptions opts);

// input [N,C,H,W], kernel [C,F,kh,kw] -> [N,F,H',W'],
// H' = (H - 1) * stride - 2*padding + kh. Adjoint of conv2d with the same kernel.
template <class T>
Tensor<T> conv_transpose2d(const Tensor<T>& input, const Tensor<T>& kernel, Conv2dOptions opts);

// x [N,C,...] + bias[C] broadcast over every trailing axis.
template <class T>
Tensor<T> add_channel_bias(const Tensor<T>& x, const Tensor<T>& bias);

template <class T>
struct RunningStats {
  std::vector<T> mean;
  std::vector<T> var;
};

struct NormOptions {
  double momentum = 0.1;
  double eps = 1e-5;
};

// Per-channel normalization over (N,H,W). Training mode normalizes with batch
// statistics and folds them into `running` (unbiased variance); inference mode
// uses `running`. Training with N == 1 throws DimensionError.
template <class T>
Tensor<T> batchnorm2d(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                      bool training, RunningStats<T>& running, NormOptions opts = {});

// Per-sample, per-channel normalization over (H,W). Used in place of
// batchnorm2d when a training batch holds a single sample. When `running` is
// given, the per-instance statistics (averaged over the batch) are folded into it.
template <class T>
Tensor<T> instance_norm2d(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                          NormOptions opts = {}, RunningStats<T>* running = nullptr);

template <class T>
Tensor<T> leaky_relu(const Tensor<T>& x, double slope);
template <class T>
Tensor<T> relu(const Tensor<T>& x);
template <class T>
Tensor<T> sigmoid(const Tensor<T>& x);
template <class T>
Tensor<T> tanh(const Tensor<T>& x);

// input [N,K], weight [K,M], bias [M] -> [N,M].
template <class T>
Tensor<T> dense(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias);

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
// alpha * x + beta.
template <class T>
Tensor<T> affine(const Tensor<T>& x, double alpha, double beta);

template <class T>
Tensor<T> sum(const Tensor<T>& x);
template <class T>
Tensor<T> mean(const Tensor<T>& x);
// d|x|/dx at 0 is 0.
template <class T>
Tensor<T> abs(const Tensor<T>& x);
// Throws DomainError on any nonpositive entry.
template <class T>
Tensor<T> log(const Tensor<T>& x);
// Gradient passes where lo <= x <= hi and is zero outside.
template <class T>
Tensor<T> clamp(const Tensor<T>& x, double lo, double hi);

// Inverted dropout: kept entries are scaled by 1/(1-rate). Identity when
// training is false or rate is 0.
template <class T>
Tensor<T> dropout(const Tensor<T>& x, double rate, bool training, Rng& rng);

// Concatenate along axis 1 (channels). Leading axis must agree, as must all trailing axes.
template <class T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);

template <class T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);

}  // namespace gogan::ad
