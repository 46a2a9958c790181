#pragma once

#include <map>
#include <string>
#include <vector>

#include "gogan/autodiff/autodiff.hpp"
#include "gogan/net/config.hpp"

namespace gogan::net {

template <class T>
using BufferMap = std::map<std::string, ad::RunningStats<T>>;

/// U-Net generator: stride-2 conv encoder, dense bottleneck, transposed-conv
/// decoder with a skip connection into every decoder block, tanh output.
template <class T>
class Generator {
 public:
  explicit Generator(GeneratorConfig config);

  /// Gaussian(0, init_stddev) kernels and dense weights, zero biases, unit gamma.
  void initialize(ad::Rng& rng);

  /// conditions [N, in_channels, R, R] in [-1,1] -> [N, 1, R, R] in [-1,1].
  /// `live_skips[j]` false replaces encoder activation j with zeros where the
  /// decoder consumes it; empty means all skips live.
  ad::Tensor<T> forward(const ad::Tensor<T>& conditions, bool training, ad::Rng& rng,
                        const std::vector<bool>& live_skips = {});

  /// Encoder activation shapes of the most recent forward.
  const std::vector<ad::Shape>& encoder_shapes() const { return encoder_shapes_; }

  const GeneratorConfig& config() const { return config_; }
  ad::ParameterList<T>& parameters() { return params_; }
  const ad::ParameterList<T>& parameters() const { return params_; }
  BufferMap<T>& buffers() { return buffers_; }
  const BufferMap<T>& buffers() const { return buffers_; }

 private:
  GeneratorConfig config_;
  ad::ParameterList<T> params_;
  BufferMap<T> buffers_;
  std::vector<ad::Shape> encoder_shapes_;
};

/// Markovian PatchGAN: judges (condition, candidate) pairs patch by patch.
template <class T>
class Discriminator {
 public:
  explicit Discriminator(DiscriminatorConfig config);

  void initialize(ad::Rng& rng);

  /// conditions [N, C, R, R], candidate [N, 1, R, R] -> [N, 1, h, w] probabilities.
  ad::Tensor<T> forward(const ad::Tensor<T>& conditions, const ad::Tensor<T>& candidate, bool training);

  const DiscriminatorConfig& config() const { return config_; }
  ad::ParameterList<T>& parameters() { return params_; }
  const ad::ParameterList<T>& parameters() const { return params_; }
  BufferMap<T>& buffers() { return buffers_; }
  const BufferMap<T>& buffers() const { return buffers_; }

 private:
  DiscriminatorConfig config_;
  ad::ParameterList<T> params_;
  BufferMap<T> buffers_;
};

extern template class Generator<float>;
extern template class Generator<double>;
extern template class Discriminator<float>;
extern template class Discriminator<double>;

}  // namespace gogan::net
