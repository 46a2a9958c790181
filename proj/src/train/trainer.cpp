#include "gogan/train/trainer.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace gogan::train {

BatchSchedule default_schedule(int epochs) {
  if (epochs < 1) throw std::invalid_argument("default_schedule: epochs must be >= 1");
  BatchSchedule s;
  const int sizes[] = {1, 2, 4, 8};
  for (int q = 0; q < 4; ++q) {
    const int start = epochs * q / 4;
    if (!s.empty() && s.back().epoch_start == start)
      s.back().batch_size = sizes[q];
    else
      s.push_back({start, sizes[q]});
  }
  return s;
}

void validate_schedule(const BatchSchedule& schedule) {
  if (schedule.empty()) throw std::invalid_argument("batch schedule is empty");
  if (schedule.front().epoch_start != 0) throw std::invalid_argument("batch schedule must start at epoch 0");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i].batch_size < 1)
      throw std::invalid_argument("batch schedule entry " + std::to_string(i) + " has a non-positive batch size");
    if (i > 0 && schedule[i].epoch_start <= schedule[i - 1].epoch_start)
      throw std::invalid_argument("batch schedule epochs must be strictly increasing (entry " + std::to_string(i) +
                                  ")");
  }
}

int batch_size_at(const BatchSchedule& schedule, int epoch) {
  if (schedule.empty()) throw std::invalid_argument("batch_size_at: empty schedule");
  if (epoch < 0) throw std::invalid_argument("batch_size_at: negative epoch");
  int n = schedule.front().batch_size;
  for (const auto& e : schedule) {
    if (e.epoch_start > epoch) break;
    n = e.batch_size;
  }
  return n;
}

BatchSchedule TrainConfig::resolved_schedule() const {
  return batch_schedule.empty() ? default_schedule(epochs) : batch_schedule;
}

void TrainConfig::validate() const {
  if (k < 1) throw std::invalid_argument("train: k must be >= 1");
  if (lambda < 0) throw std::invalid_argument("train: lambda must be >= 0");
  if (!(lr > 0)) throw std::invalid_argument("train: learning rate must be positive");
  if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1) throw std::invalid_argument("train: betas must lie in [0,1)");
  if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (checkpoint_interval < 0) throw std::invalid_argument("train: checkpoint interval must be >= 0");
  if (ema_decay < 0 || ema_decay >= 1) throw std::invalid_argument("train: ema_decay must lie in [0,1)");
  validate_schedule(resolved_schedule());
}

template <class T>
Trainer<T>::Trainer(net::Generator<T>& generator, net::Discriminator<T>& discriminator, TrainConfig config)
    : g_(generator), d_(discriminator), config_(std::move(config)) {
  config_.validate();
  schedule_ = config_.resolved_schedule();
  if (g_.config().resolution != d_.config().resolution)
    throw std::invalid_argument("train: generator and discriminator resolutions differ");
  if (g_.config().in_channels != d_.config().condition_channels)
    throw std::invalid_argument("train: generator input channels and discriminator condition channels differ");
  initialize();
}

template <class T>
void Trainer<T>::initialize() {
  state_ = TrainState<T>{};
  state_.rng = ad::Rng(config_.seed);
  g_.initialize(state_.rng);
  d_.initialize(state_.rng);
  ad::AdamOptions opts{config_.lr, config_.beta1, config_.beta2, config_.adam_eps};
  state_.g_adam.options = opts;
  state_.d_adam.options = opts;
}

template <class T>
void Trainer<T>::assemble(const std::vector<const TrainSample*>& batch, ad::Tensor<T>& x, ad::Tensor<T>& y) {
  const auto C = static_cast<std::size_t>(g_.config().in_channels);
  const auto R = static_cast<std::size_t>(g_.config().resolution);
  const std::size_t plane = R * R;
  std::vector<T> xs(batch.size() * C * plane), ys(batch.size() * plane);
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const TrainSample& s = *batch[n];
    if (static_cast<std::size_t>(s.channels) != C || static_cast<std::size_t>(s.resolution) != R ||
        s.conditions.size() != C * plane || s.target.size() != plane)
      throw ad::DimensionError("train: sample '" + s.id + "' does not match the network shape [" + std::to_string(C) +
                               "," + std::to_string(R) + "," + std::to_string(R) + "]");
    const bool flip = config_.flip_augment && ad::uniform01(state_.rng) < 0.5;
    auto put = [&](const std::vector<double>& src, T* dst, std::size_t planes) {
      for (std::size_t p = 0; p < planes; ++p)
        for (std::size_t r = 0; r < R; ++r)
          for (std::size_t c = 0; c < R; ++c)
            dst[p * plane + r * R + c] = static_cast<T>(src[p * plane + r * R + (flip ? R - 1 - c : c)]);
    };
    put(s.conditions, xs.data() + n * C * plane, C);
    put(s.target, ys.data() + n * plane, 1);
  }
  x = ad::Tensor<T>({batch.size(), C, R, R}, std::move(xs));
  y = ad::Tensor<T>({batch.size(), 1, R, R}, std::move(ys));
}

template <class T>
void Trainer<T>::check_finite(double v, const char* what) const {
  if (!std::isfinite(v))
    throw NonFiniteLossError(std::string("non-finite ") + what + " at step " + std::to_string(state_.global_step) +
                             " (epoch " + std::to_string(state_.epoch) + ")");
}

template <class T>
StepMetrics Trainer<T>::train_step(const std::vector<const TrainSample*>& batch) {
  try {
    return step_impl(batch);
  } catch (const ad::DomainError& e) {
    // NaN weights or activations surface first as a domain error inside the loss.
    throw NonFiniteLossError(std::string(e.what()) + " at step " + std::to_string(state_.global_step) + " (epoch " +
                             std::to_string(state_.epoch) + ")");
  }
}

template <class T>
StepMetrics Trainer<T>::step_impl(const std::vector<const TrainSample*>& batch) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  ad::Tensor<T> x, y;
  assemble(batch, x, y);

  StepMetrics m;
  m.step = state_.global_step;
  m.epoch = state_.epoch;
  m.batch_size = static_cast<int>(batch.size());

  const bool d_training = !config_.freeze_discriminator;
  if (config_.freeze_discriminator) {
    ad::NoGradScope<T> off;
    auto fake = g_.forward(x, true, state_.rng);
    auto loss = net::discriminator_loss(d_.forward(x, y, false), d_.forward(x, fake, false));
    m.d_loss = static_cast<double>(loss.item());
    check_finite(m.d_loss, "discriminator loss");
  } else {
    for (int i = 0; i < config_.k; ++i) {
      ad::Tape<T> tape;
      ad::TapeScope<T> scope(tape);
      ad::Tensor<T> fake;
      {
        ad::NoGradScope<T> off;
        fake = g_.forward(x, true, state_.rng);
      }
      auto loss = net::discriminator_loss(d_.forward(x, y, true), d_.forward(x, fake, true));
      m.d_loss = static_cast<double>(loss.item());
      check_finite(m.d_loss, "discriminator loss");
      d_.parameters().zero_grad();
      tape.backward(loss);
      ad::adam_step(d_.parameters(), state_.d_adam);
      ++state_.d_updates;
    }
  }

  {
    ad::Tape<T> tape;
    ad::TapeScope<T> scope(tape);
    auto fake = g_.forward(x, true, state_.rng);
    auto gl = net::generator_loss(d_.forward(x, fake, d_training), fake, y, config_.lambda, config_.adversarial_form);
    m.g_adv = static_cast<double>(gl.adversarial.item());
    m.g_l1 = static_cast<double>(gl.l1.item());
    check_finite(static_cast<double>(gl.total.item()), "generator loss");
    g_.parameters().zero_grad();
    d_.parameters().zero_grad();
    tape.backward(gl.total);
    ad::adam_step(g_.parameters(), state_.g_adam);
    ++state_.g_updates;
  }
  d_.parameters().zero_grad();
  ++state_.global_step;

  auto& s = state_;
  if (!s.ema_started) {
    s.ema_d_loss = m.d_loss;
    s.ema_g_adv = m.g_adv;
    s.ema_g_l1 = m.g_l1;
    s.ema_started = true;
  } else {
    const double a = config_.ema_decay;
    s.ema_d_loss = a * s.ema_d_loss + (1 - a) * m.d_loss;
    s.ema_g_adv = a * s.ema_g_adv + (1 - a) * m.g_adv;
    s.ema_g_l1 = a * s.ema_g_l1 + (1 - a) * m.g_l1;
  }
  return m;
}

template <class T>
std::vector<StepMetrics> Trainer<T>::train(const std::vector<TrainSample>& dataset, const CheckpointFn& on_checkpoint) {
  if (dataset.empty()) throw std::invalid_argument("train: dataset is empty");
  std::vector<StepMetrics> curve;
  auto& s = state_;
  auto out_of_steps = [&] { return config_.max_steps >= 0 && s.global_step >= config_.max_steps; };

  while (s.epoch < config_.epochs && !out_of_steps()) {
    if (s.cursor == 0 && s.permutation.empty()) {
      s.permutation.resize(dataset.size());
      std::iota(s.permutation.begin(), s.permutation.end(), std::size_t{0});
      for (std::size_t i = dataset.size(); i > 1; --i)
        std::swap(s.permutation[i - 1], s.permutation[ad::uniform_index(s.rng, i)]);
    }
    if (s.permutation.size() != dataset.size())
      throw std::invalid_argument("train: dataset size changed since the state was saved");

    const auto n = static_cast<std::size_t>(batch_size_at(schedule_, s.epoch));
    const std::size_t take = std::min(n, dataset.size() - s.cursor);
    std::vector<const TrainSample*> batch;
    for (std::size_t i = 0; i < take; ++i) batch.push_back(&dataset[s.permutation[s.cursor + i]]);

    curve.push_back(train_step(batch));
    s.cursor += take;
    if (s.cursor >= dataset.size()) {
      s.cursor = 0;
      s.permutation.clear();
      ++s.epoch;
      if (on_checkpoint && config_.checkpoint_interval > 0 && s.epoch % config_.checkpoint_interval == 0 &&
          s.epoch < config_.epochs)
        on_checkpoint(*this);
    }
  }
  if (on_checkpoint) on_checkpoint(*this);
  return curve;
}

void write_loss_csv(const std::string& path, const std::vector<StepMetrics>& curve, bool append) {
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open loss curve file " + path);
  if (!append || out.tellp() == 0) out << "step,epoch,batch_size,d_loss,g_adv,g_l1\n";
  out << std::setprecision(9);
  for (const auto& m : curve)
    out << m.step << ',' << m.epoch << ',' << m.batch_size << ',' << m.d_loss << ',' << m.g_adv << ',' << m.g_l1
        << '\n';
}

std::pair<double, double> l1_head_tail(const std::vector<StepMetrics>& curve, std::size_t window) {
  if (curve.empty() || window == 0) return {0.0, 0.0};
  window = std::min(window, curve.size());
  double head = 0, tail = 0;
  for (std::size_t i = 0; i < window; ++i) {
    head += curve[i].g_l1;
    tail += curve[curve.size() - window + i].g_l1;
  }
  return {head / window, tail / window};
}

template class Trainer<float>;
template class Trainer<double>;

}  // namespace gogan::train
