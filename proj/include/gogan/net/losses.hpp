#pragma once

#include "gogan/autodiff/tensor.hpp"

namespace gogan::net {

inline constexpr double kProbabilityEps = 1e-7;
inline constexpr double kDefaultL1Weight = 100.0;

/// BCE form of the conditional GAN value for D, to be minimized:
/// -mean(log d_real) - mean(log(1 - d_fake)), probabilities clamped to [eps, 1-eps].
template <class T>
ad::Tensor<T> discriminator_loss(const ad::Tensor<T>& d_real, const ad::Tensor<T>& d_fake,
                                 double eps = kProbabilityEps);

enum class AdversarialForm {
  NonSaturating,  // -mean(log D(x, G(x)))
  Minimax,        // mean(log(1 - D(x, G(x)))), the literal generator rule
};

template <class T>
struct GeneratorLoss {
  ad::Tensor<T> total;
  ad::Tensor<T> adversarial;
  ad::Tensor<T> l1;
};

/// total = adversarial + lambda * mean|target - generated|.
template <class T>
GeneratorLoss<T> generator_loss(const ad::Tensor<T>& d_fake, const ad::Tensor<T>& generated,
                                const ad::Tensor<T>& target, double lambda = kDefaultL1Weight,
                                AdversarialForm form = AdversarialForm::NonSaturating, double eps = kProbabilityEps);

}  // namespace gogan::net
