#pragma once

#include <functional>

#include <torch/torch.h>

#include "ffgan/networks.hpp"

namespace ffgan {

struct LossWeights {
  double lambda_adv = 1.0;
  double lambda_imgrecon = 1.0;
  double lambda_feat = 1.0;
  double gamma_r1 = 10.0;
  int r1_interval = 16;

  void validate() const;
};

/// Non-saturating logistic discriminator loss:
/// mean(softplus(-real)) + mean(softplus(fake)).
torch::Tensor d_adv_loss(const torch::Tensor& real_scores, const torch::Tensor& fake_scores);

/// Non-saturating generator loss: mean(softplus(-fake)).
torch::Tensor g_adv_loss(const torch::Tensor& fake_scores);

using ScoreFn = std::function<torch::Tensor(const torch::Tensor&)>;

/// (gamma / 2) * mean over the batch of |d score / d image|^2, evaluated on
/// real images. The result stays differentiable w.r.t. the scorer's parameters.
torch::Tensor r1_penalty(const ScoreFn& score, const torch::Tensor& real_batch, double gamma);
torch::Tensor r1_penalty(const Discriminator& d, const torch::Tensor& real_batch, double gamma);

/// Mean absolute pixel difference over every pixel of every batch item.
torch::Tensor recon_loss(const torch::Tensor& x, const torch::Tensor& y);

/// Per-layer mean absolute difference, averaged over layers. fx (the real
/// branch) is detached, so no gradient flows into it.
torch::Tensor feature_match_loss(const FeatureStack& fx, const FeatureStack& fy);

/// lambda_adv * adv + lambda_imgrecon * imgrecon + lambda_feat * feat. Throws
/// NonFiniteComponent if any component is not finite.
torch::Tensor total_loss(const torch::Tensor& adv, const torch::Tensor& imgrecon, const torch::Tensor& feat,
                         const LossWeights& weights);

}  // namespace ffgan
