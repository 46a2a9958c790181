#include "gogan/net/networks.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>
#include <string>

namespace gogan::net {

using ad::Shape;
using ad::Tensor;

int GeneratorConfig::resolved_depth() const {
  if (depth > 0) return depth;
  return resolution > 0 ? std::countr_zero(static_cast<unsigned>(resolution)) : 0;
}

int GeneratorConfig::encoder_channels(int block) const {
  long c = static_cast<long>(base_filters) << block;
  return static_cast<int>(std::min<long>(c, filter_cap));
}

void GeneratorConfig::validate() const {
  if (resolution < 16 || !std::has_single_bit(static_cast<unsigned>(resolution)))
    throw std::invalid_argument("generator: resolution must be a power of two >= 16, got " + std::to_string(resolution));
  if (in_channels < 1) throw std::invalid_argument("generator: need at least one input channel");
  if (base_filters < 1 || filter_cap < base_filters) throw std::invalid_argument("generator: invalid filter counts");
  const int d = resolved_depth();
  if (d < 2 || (resolution >> d) < 1)
    throw std::invalid_argument("generator: depth must lie in [2, log2(resolution)], got " + std::to_string(d));
  for (int w : dense_widths)
    if (w < 1) throw std::invalid_argument("generator: dense widths must be positive");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) throw std::invalid_argument("generator: dropout rate must lie in [0,1)");
}

int DiscriminatorConfig::block_channels(int block) const {
  long c = static_cast<long>(base_filters) << block;
  return static_cast<int>(std::min<long>(c, filter_cap));
}

int DiscriminatorConfig::output_size() const {
  int s = resolution >> stride2_blocks;
  // Two stride-1, padding-1, 4x4 convolutions each shrink by one.
  return s - 2;
}

void DiscriminatorConfig::validate() const {
  if (resolution < 1) throw std::invalid_argument("discriminator: resolution must be positive");
  if (condition_channels < 1) throw std::invalid_argument("discriminator: need at least one condition channel");
  if (stride2_blocks < 1) throw std::invalid_argument("discriminator: need at least one stride-2 block");
  if (base_filters < 1 || filter_cap < base_filters) throw std::invalid_argument("discriminator: invalid filter counts");
  if (output_size() < 1)
    throw std::invalid_argument("discriminator: resolution " + std::to_string(resolution) + " with " +
                                std::to_string(stride2_blocks) + " stride-2 blocks leaves no patches");
}

namespace {

constexpr std::size_t kKernel = 4;

template <class T>
void add_norm(ad::ParameterList<T>& params, BufferMap<T>& buffers, const std::string& name, std::size_t channels) {
  params.add(name + ".gamma", Tensor<T>::full({channels}, T(1), true));
  params.add(name + ".beta", Tensor<T>::zeros({channels}, true));
  buffers[name] = ad::RunningStats<T>{std::vector<T>(channels, T(0)), std::vector<T>(channels, T(1))};
}

// Batch statistics in training mode; a single-sample batch falls back to
// per-instance statistics, which is the same quantity without the N >= 2 guard.
template <class T>
Tensor<T> normalize(const Tensor<T>& x, ad::ParameterList<T>& params, BufferMap<T>& buffers, const std::string& name,
                    bool training, double momentum) {
  const auto& gamma = params.at(name + ".gamma");
  const auto& beta = params.at(name + ".beta");
  ad::NormOptions opts;
  opts.momentum = momentum;
  auto& running = buffers.at(name);
  if (training && x.dim(0) == 1) return ad::instance_norm2d(x, gamma, beta, opts, &running);
  return ad::batchnorm2d(x, gamma, beta, training, running, opts);
}

template <class T>
void init_params(ad::ParameterList<T>& params, double stddev, ad::Rng& rng) {
  for (auto& p : params) {
    const auto& n = p.name;
    const bool is_weight = n.ends_with(".weight");
    auto data = p.tensor.mutable_data();
    if (is_weight) {
      for (auto& v : data) v = static_cast<T>(stddev * ad::standard_normal(rng));
    } else if (n.ends_with(".gamma")) {
      std::fill(data.begin(), data.end(), T(1));
    } else {
      std::fill(data.begin(), data.end(), T(0));
    }
  }
}

}  // namespace

template <class T>
Generator<T>::Generator(GeneratorConfig config) : config_(std::move(config)) {
  config_.validate();
  const int depth = config_.resolved_depth();
  const auto k = kKernel;

  std::size_t in = static_cast<std::size_t>(config_.in_channels);
  for (int i = 0; i < depth; ++i) {
    const auto out = static_cast<std::size_t>(config_.encoder_channels(i));
    const std::string name = "enc" + std::to_string(i);
    params_.add(name + ".conv.weight", Tensor<T>::zeros({out, in, k, k}, true));
    const bool norm = i > 0 && config_.encoder_size(i) > 1;
    if (norm)
      add_norm(params_, buffers_, name + ".norm", out);
    else
      params_.add(name + ".conv.bias", Tensor<T>::zeros({out}, true));
    in = out;
  }

  const auto side = static_cast<std::size_t>(config_.encoder_size(depth - 1));
  const std::size_t flat = in * side * side;
  std::size_t width = flat;
  for (std::size_t l = 0; l < config_.dense_widths.size(); ++l) {
    const auto next = static_cast<std::size_t>(config_.dense_widths[l]);
    const std::string name = "bottleneck.dense" + std::to_string(l);
    params_.add(name + ".weight", Tensor<T>::zeros({width, next}, true));
    params_.add(name + ".bias", Tensor<T>::zeros({next}, true));
    width = next;
  }
  params_.add("bottleneck.out.weight", Tensor<T>::zeros({width, flat}, true));
  params_.add("bottleneck.out.bias", Tensor<T>::zeros({flat}, true));

  for (int j = depth - 1; j >= 1; --j) {
    const auto cin = 2 * static_cast<std::size_t>(config_.encoder_channels(j));
    const auto cout = static_cast<std::size_t>(config_.encoder_channels(j - 1));
    const std::string name = "dec" + std::to_string(j);
    params_.add(name + ".convt.weight", Tensor<T>::zeros({cin, cout, k, k}, true));
    add_norm(params_, buffers_, name + ".norm", cout);
  }
  const auto cin = 2 * static_cast<std::size_t>(config_.encoder_channels(0));
  params_.add("out.convt.weight", Tensor<T>::zeros({cin, 1, k, k}, true));
  params_.add("out.convt.bias", Tensor<T>::zeros({1}, true));
}

template <class T>
void Generator<T>::initialize(ad::Rng& rng) {
  init_params(params_, config_.init_stddev, rng);
  for (auto& [name, stats] : buffers_) {
    std::fill(stats.mean.begin(), stats.mean.end(), T(0));
    std::fill(stats.var.begin(), stats.var.end(), T(1));
  }
}

template <class T>
Tensor<T> Generator<T>::forward(const Tensor<T>& conditions, bool training, ad::Rng& rng,
                                const std::vector<bool>& live_skips) {
  const auto R = static_cast<std::size_t>(config_.resolution);
  if (conditions.rank() != 4 || conditions.dim(2) != conditions.dim(3))
    throw ad::DimensionError("generator: input must be square [N,C,R,R], got " + ad::shape_str(conditions.shape()));
  if (conditions.dim(2) != R)
    throw ad::DimensionError("generator: input spatial size (axes 2,3) is " + std::to_string(conditions.dim(2)) +
                             ", configured resolution is " + std::to_string(R));
  if (conditions.dim(1) != static_cast<std::size_t>(config_.in_channels))
    throw ad::DimensionError("generator: channel axis (1) is " + std::to_string(conditions.dim(1)) + ", expected " +
                             std::to_string(config_.in_channels));

  const int depth = config_.resolved_depth();
  const double slope = config_.leaky_slope;
  const ad::Conv2dOptions down{2, 1};
  const std::size_t N = conditions.dim(0);

  std::vector<Tensor<T>> skips;
  encoder_shapes_.clear();
  Tensor<T> h = conditions;
  for (int i = 0; i < depth; ++i) {
    const std::string name = "enc" + std::to_string(i);
    h = ad::conv2d(h, params_.at(name + ".conv.weight"), down);
    if (params_.contains(name + ".conv.bias"))
      h = ad::add_channel_bias(h, params_.at(name + ".conv.bias"));
    else
      h = normalize(h, params_, buffers_, name + ".norm", training, config_.norm_momentum);
    h = ad::leaky_relu(h, slope);
    skips.push_back(h);
    encoder_shapes_.push_back(h.shape());
  }

  const Shape bottleneck_shape = h.shape();
  Tensor<T> z = ad::reshape(h, {N, ad::numel(bottleneck_shape) / N});
  for (std::size_t l = 0; l < config_.dense_widths.size(); ++l) {
    const std::string name = "bottleneck.dense" + std::to_string(l);
    z = ad::leaky_relu(ad::dense(z, params_.at(name + ".weight"), params_.at(name + ".bias")), slope);
  }
  z = ad::leaky_relu(ad::dense(z, params_.at("bottleneck.out.weight"), params_.at("bottleneck.out.bias")), slope);
  h = ad::reshape(z, bottleneck_shape);

  const bool dropout_on = training || config_.dropout_at_inference;
  auto skip = [&](int j) {
    if (live_skips.empty() || live_skips.at(static_cast<std::size_t>(j))) return skips[j];
    return Tensor<T>::zeros(skips[j].shape());
  };
  for (int j = depth - 1; j >= 1; --j) {
    const std::string name = "dec" + std::to_string(j);
    h = ad::concat_channels(h, skip(j));
    h = ad::conv_transpose2d(h, params_.at(name + ".convt.weight"), down);
    h = normalize(h, params_, buffers_, name + ".norm", training, config_.norm_momentum);
    if (depth - 1 - j < config_.dropout_blocks) h = ad::dropout(h, config_.dropout_rate, dropout_on, rng);
    h = ad::relu(h);
  }
  h = ad::concat_channels(h, skip(0));
  h = ad::conv_transpose2d(h, params_.at("out.convt.weight"), down);
  h = ad::add_channel_bias(h, params_.at("out.convt.bias"));
  return ad::tanh(h);
}

template <class T>
Discriminator<T>::Discriminator(DiscriminatorConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto k = kKernel;
  std::size_t in = static_cast<std::size_t>(config_.condition_channels) + 1;
  for (int i = 0; i <= config_.stride2_blocks; ++i) {
    const auto out = static_cast<std::size_t>(config_.block_channels(i));
    const std::string name = "block" + std::to_string(i);
    params_.add(name + ".conv.weight", Tensor<T>::zeros({out, in, k, k}, true));
    if (i == 0)
      params_.add(name + ".conv.bias", Tensor<T>::zeros({out}, true));
    else
      add_norm(params_, buffers_, name + ".norm", out);
    in = out;
  }
  params_.add("out.conv.weight", Tensor<T>::zeros({1, in, k, k}, true));
  params_.add("out.conv.bias", Tensor<T>::zeros({1}, true));
}

template <class T>
void Discriminator<T>::initialize(ad::Rng& rng) {
  init_params(params_, config_.init_stddev, rng);
  for (auto& [name, stats] : buffers_) {
    std::fill(stats.mean.begin(), stats.mean.end(), T(0));
    std::fill(stats.var.begin(), stats.var.end(), T(1));
  }
}

template <class T>
Tensor<T> Discriminator<T>::forward(const Tensor<T>& conditions, const Tensor<T>& candidate, bool training) {
  if (conditions.rank() != 4 || candidate.rank() != 4)
    throw ad::DimensionError("discriminator: inputs must be rank 4");
  for (std::size_t ax : {std::size_t{0}, std::size_t{2}, std::size_t{3}})
    if (conditions.dim(ax) != candidate.dim(ax))
      throw ad::DimensionError("discriminator: condition and candidate differ on axis " + std::to_string(ax) + " (" +
                               ad::shape_str(conditions.shape()) + " vs " + ad::shape_str(candidate.shape()) + ")");
  if (conditions.dim(2) != static_cast<std::size_t>(config_.resolution))
    throw ad::DimensionError("discriminator: spatial size (axis 2) " + std::to_string(conditions.dim(2)) +
                             " does not match configured resolution " + std::to_string(config_.resolution));

  Tensor<T> h = ad::concat_channels(conditions, candidate);
  for (int i = 0; i <= config_.stride2_blocks; ++i) {
    const std::string name = "block" + std::to_string(i);
    const ad::Conv2dOptions opts{i < config_.stride2_blocks ? std::size_t{2} : std::size_t{1}, 1};
    h = ad::conv2d(h, params_.at(name + ".conv.weight"), opts);
    if (i == 0)
      h = ad::add_channel_bias(h, params_.at(name + ".conv.bias"));
    else
      h = normalize(h, params_, buffers_, name + ".norm", training, config_.norm_momentum);
    h = ad::leaky_relu(h, config_.leaky_slope);
  }
  h = ad::conv2d(h, params_.at("out.conv.weight"), ad::Conv2dOptions{1, 1});
  h = ad::add_channel_bias(h, params_.at("out.conv.bias"));
  return ad::sigmoid(h);
}

template class Generator<float>;
template class Generator<double>;
template class Discriminator<float>;
template class Discriminator<double>;

}  // namespace gogan::net
