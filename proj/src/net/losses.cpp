#include "gogan/net/losses.hpp"

#include "gogan/autodiff/ops.hpp"

namespace gogan::net {

template <class T>
ad::Tensor<T> discriminator_loss(const ad::Tensor<T>& d_real, const ad::Tensor<T>& d_fake, double eps) {
  const auto real = ad::clamp(d_real, eps, 1.0 - eps);
  const auto fake = ad::clamp(d_fake, eps, 1.0 - eps);
  const auto real_term = ad::mean(ad::log(real));
  const auto fake_term = ad::mean(ad::log(ad::affine(fake, -1.0, 1.0)));
  return ad::affine(ad::add(real_term, fake_term), -1.0, 0.0);
}

template <class T>
GeneratorLoss<T> generator_loss(const ad::Tensor<T>& d_fake, const ad::Tensor<T>& generated,
                                const ad::Tensor<T>& target, double lambda, AdversarialForm form, double eps) {
  if (lambda < 0.0) throw ad::UsageError("generator_loss: lambda must be >= 0");
  const auto fake = ad::clamp(d_fake, eps, 1.0 - eps);
  GeneratorLoss<T> out;
  if (form == AdversarialForm::NonSaturating)
    out.adversarial = ad::affine(ad::mean(ad::log(fake)), -1.0, 0.0);
  else
    out.adversarial = ad::mean(ad::log(ad::affine(fake, -1.0, 1.0)));
  out.l1 = ad::mean(ad::abs(ad::sub(target, generated)));
  out.total = ad::add(out.adversarial, ad::affine(out.l1, lambda, 0.0));
  return out;
}

template ad::Tensor<float> discriminator_loss<float>(const ad::Tensor<float>&, const ad::Tensor<float>&, double);
template ad::Tensor<double> discriminator_loss<double>(const ad::Tensor<double>&, const ad::Tensor<double>&, double);
template GeneratorLoss<float> generator_loss<float>(const ad::Tensor<float>&, const ad::Tensor<float>&,
                                                    const ad::Tensor<float>&, double, AdversarialForm, double);
template GeneratorLoss<double> generator_loss<double>(const ad::Tensor<double>&, const ad::Tensor<double>&,
                                                      const ad::Tensor<double>&, double, AdversarialForm, double);

}  // namespace gogan::net
