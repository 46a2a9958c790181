#include <Eigen/Core>

#include "gogan/autodiff/ops.hpp"
#include "op_support.hpp"

namespace gogan::ad {

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Geometry of one sliding-window correlation: an image of `channels` x
// `height` x `width` scanned by a kh x kw window producing an out_h x out_w grid.
struct Window {
  std::size_t channels, height, width;
  std::size_t kh, kw, stride, padding;
  std::size_t out_h, out_w;

  std::size_t rows() const { return channels * kh * kw; }
  std::size_t cols() const { return out_h * out_w; }
};

template <class T>
void im2col(const T* image, const Window& g, T* col) {
  const auto cols = g.cols();
  for (std::size_t c = 0; c < g.channels; ++c) {
    const T* plane = image + c * g.height * g.width;
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        T* row = col + ((c * g.kh + ki) * g.kw + kj) * cols;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ki) - static_cast<std::ptrdiff_t>(g.padding);
          T* dst = row + oy * g.out_w;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.height)) {
            std::fill(dst, dst + g.out_w, T(0));
            continue;
          }
          const T* src = plane + iy * g.width;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kj) - static_cast<std::ptrdiff_t>(g.padding);
            dst[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.width)) ? T(0) : src[ix];
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-add columns back onto the image.
template <class T>
void col2im(const T* col, const Window& g, T* image) {
  const auto cols = g.cols();
  for (std::size_t c = 0; c < g.channels; ++c) {
    T* plane = image + c * g.height * g.width;
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        const T* row = col + ((c * g.kh + ki) * g.kw + kj) * cols;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ki) - static_cast<std::ptrdiff_t>(g.padding);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.height)) continue;
          const T* src = row + oy * g.out_w;
          T* dst = plane + iy * g.width;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kj) - static_cast<std::ptrdiff_t>(g.padding);
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(g.width)) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

template <class T>
void check_rank4(const Tensor<T>& t, const char* op, const char* what) {
  detail::require(t.rank() == 4, std::string(op) + ": " + what + " must be rank 4, got shape " + shape_str(t.shape()));
}

}  // namespace

template <class T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, Conv2dOptions opts) {
  check_rank4(input, "conv2d", "input");
  check_rank4(kernel, "conv2d", "kernel");
  detail::require(opts.stride >= 1, "conv2d: stride must be >= 1");
  const auto N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  const auto F = kernel.dim(0), kh = kernel.dim(2), kw = kernel.dim(3);
  detail::require(kernel.dim(1) == C, "conv2d: channel axis (1) mismatch: input has " + std::to_string(C) +
                                          ", kernel expects " + std::to_string(kernel.dim(1)));
  detail::require(kh <= H + 2 * opts.padding, "conv2d: kernel height (axis 2) " + std::to_string(kh) +
                                                  " exceeds padded input height " + std::to_string(H + 2 * opts.padding));
  detail::require(kw <= W + 2 * opts.padding, "conv2d: kernel width (axis 3) " + std::to_string(kw) +
                                                  " exceeds padded input width " + std::to_string(W + 2 * opts.padding));

  const Window g{C, H, W, kh, kw, opts.stride, opts.padding, (H + 2 * opts.padding - kh) / opts.stride + 1,
                 (W + 2 * opts.padding - kw) / opts.stride + 1};
  const auto in_plane = C * H * W, out_plane = F * g.cols();

  std::vector<T> out(N * out_plane);
  std::vector<T> col(g.rows() * g.cols());
  Eigen::Map<const RowMat<T>> w(kernel.data().data(), F, g.rows());
  Eigen::Map<const RowMat<T>> cm(col.data(), g.rows(), g.cols());
  for (std::size_t n = 0; n < N; ++n) {
    im2col(input.data().data() + n * in_plane, g, col.data());
    Eigen::Map<RowMat<T>> o(out.data() + n * out_plane, F, g.cols());
    o.noalias() = w * cm;
  }

  const bool tracked = detail::needs_record({&input, &kernel});
  auto result = detail::make_result<T>({N, F, g.out_h, g.out_w}, std::move(out), tracked);
  if (tracked) {
    auto xi = input.impl();
    auto ki = kernel.impl();
    detail::record<T>("conv2d", {&input, &kernel}, result, [xi, ki, g, N, F, in_plane, out_plane](const std::vector<T>& gout) {
      T* gx = detail::grad_sink(xi);
      T* gk = detail::grad_sink(ki);
      std::vector<T> col(g.rows() * g.cols());
      Eigen::Map<const RowMat<T>> w(ki->data.data(), F, g.rows());
      for (std::size_t n = 0; n < N; ++n) {
        Eigen::Map<const RowMat<T>> go(gout.data() + n * out_plane, F, g.cols());
        if (gk) {
          im2col(xi->data.data() + n * in_plane, g, col.data());
          Eigen::Map<const RowMat<T>> cm(col.data(), g.rows(), g.cols());
          Eigen::Map<RowMat<T>> gw(gk, F, g.rows());
          gw.noalias() += go * cm.transpose();
        }
        if (gx) {
          Eigen::Map<RowMat<T>> cm(col.data(), g.rows(), g.cols());
          cm.noalias() = w.transpose() * go;
          col2im(col.data(), g, gx + n * in_plane);
        }
      }
    });
  }
  return result;
}

template <class T>
Tensor<T> conv_transpose2d(const Tensor<T>& input, const Tensor<T>& kernel, Conv2dOptions opts) {
  check_rank4(input, "conv_transpose2d", "input");
  check_rank4(kernel, "conv_transpose2d", "kernel");
  detail::require(opts.stride >= 1, "conv_transpose2d: stride must be >= 1");
  const auto N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  const auto F = kernel.dim(1), kh = kernel.dim(2), kw = kernel.dim(3);
  detail::require(kernel.dim(0) == C, "conv_transpose2d: channel axis (1) mismatch: input has " + std::to_string(C) +
                                          ", kernel axis 0 expects " + std::to_string(kernel.dim(0)));
  const auto full_h = (H - 1) * opts.stride + kh, full_w = (W - 1) * opts.stride + kw;
  detail::require(full_h > 2 * opts.padding, "conv_transpose2d: padding removes the whole output height (axis 2)");
  detail::require(full_w > 2 * opts.padding, "conv_transpose2d: padding removes the whole output width (axis 3)");
  const auto Ho = full_h - 2 * opts.padding, Wo = full_w - 2 * opts.padding;

  // The transposed op scatters through the conv2d window that maps the
  // output grid (Ho,Wo) back onto the input grid (H,W).
  const Window g{F, Ho, Wo, kh, kw, opts.stride, opts.padding, H, W};
  const auto in_plane = C * H * W, out_plane = F * Ho * Wo;

  std::vector<T> out(N * out_plane, T(0));
  std::vector<T> col(g.rows() * g.cols());
  Eigen::Map<const RowMat<T>> w(kernel.data().data(), C, g.rows());
  Eigen::Map<RowMat<T>> cm(col.data(), g.rows(), g.cols());
  for (std::size_t n = 0; n < N; ++n) {
    Eigen::Map<const RowMat<T>> x(input.data().data() + n * in_plane, C, H * W);
    cm.noalias() = w.transpose() * x;
    col2im(col.data(), g, out.data() + n * out_plane);
  }

  const bool tracked = detail::needs_record({&input, &kernel});
  auto result = detail::make_result<T>({N, F, Ho, Wo}, std::move(out), tracked);
  if (tracked) {
    auto xi = input.impl();
    auto ki = kernel.impl();
    detail::record<T>("conv_transpose2d", {&input, &kernel}, result,
                      [xi, ki, g, N, C, in_plane, out_plane](const std::vector<T>& gout) {
                        T* gx = detail::grad_sink(xi);
                        T* gk = detail::grad_sink(ki);
                        std::vector<T> col(g.rows() * g.cols());
                        Eigen::Map<const RowMat<T>> cm(col.data(), g.rows(), g.cols());
                        Eigen::Map<const RowMat<T>> w(ki->data.data(), C, g.rows());
                        for (std::size_t n = 0; n < N; ++n) {
                          im2col(gout.data() + n * out_plane, g, col.data());
                          if (gx) {
                            Eigen::Map<RowMat<T>> dx(gx + n * in_plane, C, g.cols());
                            dx.noalias() += w * cm;
                          }
                          if (gk) {
                            Eigen::Map<const RowMat<T>> x(xi->data.data() + n * in_plane, C, g.cols());
                            Eigen::Map<RowMat<T>> gw(gk, C, g.rows());
                            gw.noalias() += x * cm.transpose();
                          }
                        }
                      });
  }
  return result;
}

template <class T>
Tensor<T> add_channel_bias(const Tensor<T>& x, const Tensor<T>& bias) {
  detail::require(x.rank() >= 2, "add_channel_bias: input must have a channel axis (1), got " + shape_str(x.shape()));
  const auto N = x.dim(0), C = x.dim(1);
  detail::require(bias.numel() == C, "add_channel_bias: bias length " + std::to_string(bias.numel()) +
                                         " does not match channel axis (1) of size " + std::to_string(C));
  const auto inner = x.numel() / (N * C);
  std::vector<T> out(x.values());
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < C; ++c) {
      T* p = out.data() + (n * C + c) * inner;
      const T b = bias[c];
      for (std::size_t i = 0; i < inner; ++i) p[i] += b;
    }
  const bool tracked = detail::needs_record({&x, &bias});
  auto result = detail::make_result<T>(x.shape(), std::move(out), tracked);
  if (tracked) {
    auto xi = x.impl();
    auto bi = bias.impl();
    detail::record<T>("add_channel_bias", {&x, &bias}, result, [xi, bi, N, C, inner](const std::vector<T>& g) {
      if (T* gx = detail::grad_sink(xi))
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      if (T* gb = detail::grad_sink(bi))
        for (std::size_t n = 0; n < N; ++n)
          for (std::size_t c = 0; c < C; ++c) {
            const T* p = g.data() + (n * C + c) * inner;
            T s = 0;
            for (std::size_t i = 0; i < inner; ++i) s += p[i];
            gb[c] += s;
          }
    });
  }
  return result;
}

#define GOGAN_INSTANTIATE_CONV(T)                                                         \
  template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, Conv2dOptions);        \
  template Tensor<T> conv_transpose2d<T>(const Tensor<T>&, const Tensor<T>&, Conv2dOptions); \
  template Tensor<T> add_channel_bias<T>(const Tensor<T>&, const Tensor<T>&);

GOGAN_INSTANTIATE_CONV(float)
GOGAN_INSTANTIATE_CONV(double)

}  // namespace gogan::ad
