#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gogan/autodiff/autodiff.hpp"
#include "gogan/net/losses.hpp"
#include "gogan/net/networks.hpp"

namespace gogan::train {

struct ScheduleEntry {
  int epoch_start = 0;
  int batch_size = 1;
};
using BatchSchedule = std::vector<ScheduleEntry>;

/// {1,2,4,8} switching at 0%, 25%, 50% and 75% of `epochs`. Entries that
/// would land on the same epoch collapse to the later (larger) size.
BatchSchedule default_schedule(int epochs);

/// Batch size of the last entry whose epoch_start <= epoch.
/// Throws std::invalid_argument for an empty schedule or a negative epoch.
int batch_size_at(const BatchSchedule& schedule, int epoch);

void validate_schedule(const BatchSchedule& schedule);

struct TrainConfig {
  int k = 1;
  double lambda = net::kDefaultL1Weight;
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  // Empty selects default_schedule(epochs).
  BatchSchedule batch_schedule;
  int epochs = 1;
  std::uint64_t seed = 0;
  // Epochs between checkpoints; 0 disables periodic checkpoints.
  int checkpoint_interval = 0;
  std::string checkpoint_path;
  // Stop after this many generator updates in total; negative means no limit.
  std::int64_t max_steps = -1;
  net::AdversarialForm adversarial_form = net::AdversarialForm::NonSaturating;
  // Mirror samples left-right with probability 1/2. Off by default: a flipped
  // cantilever has its support on the other side.
  bool flip_augment = false;
  // Skip discriminator updates (D still scores fakes). Used to isolate the generator.
  bool freeze_discriminator = false;
  // Smoothing of the running loss averages.
  double ema_decay = 0.9;

  BatchSchedule resolved_schedule() const;
  void validate() const;
};

/// One paired example. Values are stored in [-1,1] image convention,
/// conditions channel-major [C,R,R], target [1,R,R].
struct TrainSample {
  std::string id;
  int channels = 0;
  int resolution = 0;
  std::vector<double> conditions;
  std::vector<double> target;
  std::vector<double> values;  // raw condition scalars, logging only
};

template <class T>
struct TrainState {
  int epoch = 0;
  // Position inside the current epoch's permutation.
  std::size_t cursor = 0;
  std::vector<std::size_t> permutation;
  std::int64_t global_step = 0;
  std::int64_t d_updates = 0;
  std::int64_t g_updates = 0;
  ad::AdamState<T> g_adam;
  ad::AdamState<T> d_adam;
  ad::Rng rng;
  bool ema_started = false;
  double ema_d_loss = 0.0;
  double ema_g_adv = 0.0;
  double ema_g_l1 = 0.0;
};

struct StepMetrics {
  std::int64_t step = 0;
  int epoch = 0;
  int batch_size = 0;
  double d_loss = 0.0;
  double g_adv = 0.0;
  double g_l1 = 0.0;
};

/// Thrown when a loss turns non-finite; the message names the step.
class NonFiniteLossError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class T>
class Trainer {
 public:
  using CheckpointFn = std::function<void(const Trainer&)>;

  Trainer(net::Generator<T>& generator, net::Discriminator<T>& discriminator, TrainConfig config);

  /// Fresh state: networks initialized from the seed, Adam moments empty.
  void initialize();

  /// k discriminator updates on `batch` (a new fake per update), then one
  /// generator update.
  StepMetrics train_step(const std::vector<const TrainSample*>& batch);

  /// Runs from the current state until `epochs` are done or max_steps is hit.
  /// `on_checkpoint` fires every checkpoint_interval epochs and at the end.
  std::vector<StepMetrics> train(const std::vector<TrainSample>& dataset, const CheckpointFn& on_checkpoint = {});

  TrainState<T>& state() { return state_; }
  const TrainState<T>& state() const { return state_; }
  const TrainConfig& config() const { return config_; }
  net::Generator<T>& generator() { return g_; }
  const net::Generator<T>& generator() const { return g_; }
  net::Discriminator<T>& discriminator() { return d_; }
  const net::Discriminator<T>& discriminator() const { return d_; }

 private:
  StepMetrics step_impl(const std::vector<const TrainSample*>& batch);
  void assemble(const std::vector<const TrainSample*>& batch, ad::Tensor<T>& x, ad::Tensor<T>& y);
  void check_finite(double v, const char* what) const;

  net::Generator<T>& g_;
  net::Discriminator<T>& d_;
  TrainConfig config_;
  BatchSchedule schedule_;
  TrainState<T> state_;
};

/// CSV with header step,epoch,batch_size,d_loss,g_adv,g_l1.
void write_loss_csv(const std::string& path, const std::vector<StepMetrics>& curve, bool append = false);

/// Mean of the first `window` values of g_l1 and of the last `window`.
std::pair<double, double> l1_head_tail(const std::vector<StepMetrics>& curve, std::size_t window);

extern template class Trainer<float>;
extern template class Trainer<double>;

}  // namespace gogan::train
