#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "ffgan/glyph_data.hpp"
#include "ffgan/losses.hpp"
#include "ffgan/networks.hpp"

namespace ffgan {

struct TrainConfig {
  NetworkSpec network;
  std::size_t batch_size = 8;
  std::int64_t steps = 1000;  // iterations per train() call
  double learning_rate = 2e-3;
  double beta1 = 0.0;
  double beta2 = 0.99;
  double adam_eps = 1e-8;
  LossWeights weights;
  double ema_decay = 0.999;
  double mixing_prob = 1.0;  // chance of a two-vector schedule per adversarial step
  std::uint64_t seed = 0;
  std::int64_t log_every = 10;
  std::int64_t checkpoint_every = 0;  // 0: only the final checkpoint
  bool drop_last = true;

  void validate() const;
  /// Everything except `steps`, which is a per-call run length rather than
  /// part of the model's identity.
  std::string to_json() const;
  static TrainConfig from_json(const std::string& text);
};

/// Everything a run needs to continue bit-identically: networks, the EMA
/// generator, Adam moments, and the iteration counter. Random draws are forked
/// from (config.seed, step), so no generator state has to be carried.
class TrainState {
 public:
  explicit TrainState(TrainConfig config);
  TrainState(TrainState&&) noexcept;
  TrainState& operator=(TrainState&&) noexcept;
  ~TrainState();

  TrainState clone() const;

  /// Dotted-path view of every tensor in the state (parameters, EMA copy,
  /// optimizer moments and counters), in a fixed order.
  std::vector<std::pair<std::string, torch::Tensor>> named_tensors() const;
  /// Inverse of named_tensors(); throws Corrupt on a missing or misshapen entry.
  void load_named_tensors(const std::vector<std::pair<std::string, torch::Tensor>>& entries);

  TrainConfig config;
  Generator g{nullptr};
  Generator g_ema{nullptr};
  Encoder e{nullptr};
  Discriminator d{nullptr};
  std::unique_ptr<torch::optim::Adam> opt_g;
  std::unique_ptr<torch::optim::Adam> opt_e;
  std::unique_ptr<torch::optim::Adam> opt_d;
  std::int64_t step = 0;

 private:
  void make_optimizers();
};

struct StepMetrics {
  std::int64_t step = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  double r1 = 0.0;  // 0 on steps without the lazy R1 term
  double recon = 0.0;
  double featmatch = 0.0;
  int k = 0;  // crossover index of the adversarial step

  std::string csv_line() const;  // step,d_loss,g_loss,r1,recon,featmatch,k
};

/// Mixing-regularized adversarial update: D on the logistic loss (plus lazy
/// R1 when step % r1_interval == 0), then G on freshly generated fakes, then
/// the EMA. Never touches E. Does not advance state.step.
StepMetrics adversarial_step(TrainState& state, const torch::Tensor& real_batch);

/// Encoder path: W = E(x) at every site, y = G(W); updates E and G on the
/// weighted L1 + feature-matching loss, then the EMA. Never touches D. Does
/// not advance state.step.
StepMetrics reconstruction_step(TrainState& state, const torch::Tensor& real_batch);

/// One training iteration: adversarial_step, reconstruction_step, ++step.
StepMetrics train_iteration(TrainState& state, const torch::Tensor& real_batch);

/// ema = decay * ema + (1 - decay) * params, elementwise over every parameter.
void ema_update(torch::nn::Module& ema, const torch::nn::Module& params, double decay);

struct TrainRunOptions {
  std::filesystem::path out_dir;  // empty: no files written
  std::function<void(const StepMetrics&)> on_log;
};

struct TrainResult {
  TrainState state;
  std::vector<StepMetrics> log;
};

/// Runs config.steps iterations starting from `state` over the given pixels.
/// Logs every log_every steps (by global step), checkpoints on cadence and at
/// the end when out_dir is set.
TrainResult train(TrainState state, std::vector<GlyphImage> images, const TrainRunOptions& options = {});
TrainResult train(const TrainConfig& config, const FontDataset& dataset, const TrainRunOptions& options = {});

}  // namespace ffgan
