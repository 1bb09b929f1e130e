#include "ffgan/losses.hpp"

#include <cmath>
#include <sstream>

#include "ffgan/errors.hpp"

namespace ffgan {
namespace F = torch::nn::functional;

void LossWeights::validate() const {
  if (lambda_adv < 0 || lambda_imgrecon < 0 || lambda_feat < 0 || gamma_r1 < 0) {
    fail(ErrorKind::Config, "loss weights must be non-negative");
  }
  if (r1_interval < 1) fail(ErrorKind::Config, "r1_interval must be >= 1");
}

torch::Tensor d_adv_loss(const torch::Tensor& real_scores, const torch::Tensor& fake_scores) {
  if (real_scores.numel() == 0 || fake_scores.numel() == 0) fail(ErrorKind::EmptyBatch, "d_adv_loss needs scores");
  return F::softplus(-real_scores).mean() + F::softplus(fake_scores).mean();
}

torch::Tensor g_adv_loss(const torch::Tensor& fake_scores) {
  if (fake_scores.numel() == 0) fail(ErrorKind::EmptyBatch, "g_adv_loss needs scores");
  return F::softplus(-fake_scores).mean();
}

torch::Tensor r1_penalty(const ScoreFn& score, const torch::Tensor& real_batch, double gamma) {
  if (real_batch.numel() == 0 || real_batch.size(0) == 0) fail(ErrorKind::EmptyBatch, "r1_penalty needs real images");
  if (gamma < 0) fail(ErrorKind::InvalidArgument, "gamma must be non-negative");
  auto x = real_batch.detach().requires_grad_(true);
  auto scores = score(x);
  auto grad = torch::autograd::grad({scores.sum()}, {x}, /*grad_outputs=*/{}, /*retain_graph=*/true,
                                    /*create_graph=*/true, /*allow_unused=*/true)[0];
  if (!grad.defined()) return torch::zeros({}, real_batch.options());
  return 0.5 * gamma * grad.pow(2).flatten(1).sum(1).mean();
}

torch::Tensor r1_penalty(const Discriminator& d, const torch::Tensor& real_batch, double gamma) {
  return r1_penalty([&d](const torch::Tensor& x) { return d->score(x); }, real_batch, gamma);
}

torch::Tensor recon_loss(const torch::Tensor& x, const torch::Tensor& y) {
  if (x.sizes() != y.sizes()) {
    std::ostringstream msg;
    msg << "recon_loss shapes differ: " << x.sizes() << " vs " << y.sizes();
    fail(ErrorKind::ShapeMismatch, msg.str());
  }
  return (x - y).abs().mean();
}

torch::Tensor feature_match_loss(const FeatureStack& fx, const FeatureStack& fy) {
  if (fx.empty() || fx.size() != fy.size()) {
    fail(ErrorKind::StackMismatch, "feature stacks have " + std::to_string(fx.size()) + " and " +
                                       std::to_string(fy.size()) + " layers");
  }
  torch::Tensor total;
  for (std::size_t i = 0; i < fx.size(); ++i) {
    if (fx[i].sizes() != fy[i].sizes()) {
      std::ostringstream msg;
      msg << "feature layer " << i << " shapes differ: " << fx[i].sizes() << " vs " << fy[i].sizes();
      fail(ErrorKind::StackMismatch, msg.str());
    }
    auto layer = (fx[i].detach() - fy[i]).abs().mean();
    total = total.defined() ? total + layer : layer;
  }
  return total / static_cast<double>(fx.size());
}

torch::Tensor total_loss(const torch::Tensor& adv, const torch::Tensor& imgrecon, const torch::Tensor& feat,
                         const LossWeights& weights) {
  for (const auto* part : {&adv, &imgrecon, &feat}) {
    if (!torch::isfinite(*part).all().item<bool>()) {
      fail(ErrorKind::NonFiniteComponent, "loss component is not finite");
    }
  }
  return weights.lambda_adv * adv + weights.lambda_imgrecon * imgrecon + weights.lambda_feat * feat;
}

}  // namespace ffgan
