#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "ffgan/errors.hpp"
#include "ffgan/losses.hpp"
#include "ffgan/rng.hpp"
#include "test_support.hpp"

using namespace ffgan;
using namespace ffgan::testing;

namespace {

// Independent softplus oracle in long double.
long double softplus(long double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

torch::Tensor f64(std::vector<double> v) { return torch::tensor(v, torch::kFloat64); }

}  // namespace

TEST(AdvLoss, ClosedFormAtZeroScores) {
  const double ln2 = std::log(2.0);
  EXPECT_NEAR(d_adv_loss(torch::zeros({4}), torch::zeros({4})).item<double>(), 2 * ln2, 1e-6);
  EXPECT_NEAR(g_adv_loss(torch::zeros({4})).item<double>(), ln2, 1e-6);
}

TEST(AdvLoss, MatchesSoftplusOracle) {
  const std::vector<double> real{3.0, -1.5, 0.25, 40.0}, fake{-2.0, 0.5, -35.0, 1.0};
  long double d = 0, g = 0;
  for (double r : real) d += softplus(-r) / real.size();
  for (double f : fake) d += softplus(f) / fake.size();
  for (double f : fake) g += softplus(-f) / fake.size();
  EXPECT_NEAR(d_adv_loss(f64(real), f64(fake)).item<double>(), static_cast<double>(d), 1e-12);
  EXPECT_NEAR(g_adv_loss(f64(fake)).item<double>(), static_cast<double>(g), 1e-12);
}

TEST(AdvLoss, StableForHugeScores) {
  EXPECT_TRUE(std::isfinite(d_adv_loss(torch::full({2}, 1e4f), torch::full({2}, -1e4f)).item<double>()));
  EXPECT_NEAR(g_adv_loss(torch::full({2}, -1e4f)).item<double>(), 1e4, 1e-2);
}

TEST(R1, LinearDiscriminatorClosedForm) {
  // D(x) = <w, x>: the input gradient is w for every sample, so the penalty is
  // (gamma/2) * |w|^2 regardless of the batch.
  auto gen = torch_generator(11);
  const auto w = torch::randn({1, 1, 4, 4}, gen, torch::TensorOptions().dtype(torch::kFloat64)).requires_grad_();
  const ScoreFn linear = [&](const torch::Tensor& x) { return (x * w).sum({1, 2, 3}); };
  const auto x = random_images(3, 4, 2, torch::kFloat64);
  for (double gamma : {10.0, 0.5}) {
    const double expected = gamma / 2 * w.detach().pow(2).sum().item<double>();
    EXPECT_NEAR(r1_penalty(linear, x, gamma).item<double>(), expected, 1e-6);
  }
  // Differentiable in w: d/dw (gamma/2)|w|^2 = gamma * w.
  const auto p = r1_penalty(linear, x, 10.0);
  const auto gw = torch::autograd::grad({p}, {w})[0];
  EXPECT_TRUE(torch::allclose(gw, 10.0 * w.detach(), 0, 1e-9));
}

TEST(R1, ZeroForFreshDiscriminator) {
  Discriminator d(desk_spec());
  auto gen = torch_generator(1);
  d->initialize(gen);
  EXPECT_EQ(r1_penalty(d, random_images(4, 32, 3), 10.0).item<double>(), 0.0);
}

TEST(Recon, BruteForceMeanAbsolute) {
  const auto x = random_images(3, 8, 1, torch::kFloat64), y = random_images(3, 8, 2, torch::kFloat64);
  const double* px = x.contiguous().data_ptr<double>();
  const double* py = y.contiguous().data_ptr<double>();
  long double sum = 0;
  for (std::int64_t i = 0; i < x.numel(); ++i) sum += std::fabs(px[i] - py[i]);
  EXPECT_NEAR(recon_loss(x, y).item<double>(), static_cast<double>(sum / x.numel()), 1e-12);
  EXPECT_EQ(recon_loss(x, x).item<double>(), 0.0);
}

TEST(Recon, ShapeMismatch) {
  try {
    recon_loss(torch::zeros({1, 1, 8, 8}), torch::zeros({1, 1, 4, 4}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ShapeMismatch);
  }
}

TEST(FeatureMatch, AveragesLayerMeans) {
  const FeatureStack fx{torch::zeros({2, 3}), torch::ones({1, 4, 2, 2})};
  const FeatureStack fy{torch::full({2, 3}, 0.5), torch::full({1, 4, 2, 2}, -1.0)};
  // Layer means 0.5 and 2.0.
  EXPECT_NEAR(feature_match_loss(fx, fy).item<double>(), 1.25, 1e-7);
  EXPECT_EQ(feature_match_loss(fx, fx).item<double>(), 0.0);
}

TEST(FeatureMatch, RealBranchReceivesNoGradient) {
  auto a = torch::ones({4}, torch::kFloat64).requires_grad_();
  auto b = torch::zeros({4}, torch::kFloat64).requires_grad_();
  const auto loss = feature_match_loss({a * 2}, {b * 2});
  const auto grads = torch::autograd::grad({loss}, {a, b}, {}, false, false, true);
  EXPECT_FALSE(grads[0].defined() && grads[0].abs().sum().item<double>() != 0.0);
  EXPECT_GT(grads[1].abs().sum().item<double>(), 0.0);
}

TEST(FeatureMatch, LayerCountMismatch) {
  EXPECT_THROW(feature_match_loss({torch::zeros({1})}, {torch::zeros({1}), torch::zeros({1})}), Error);
}

TEST(TotalLoss, WeightedSum) {
  LossWeights w;
  w.lambda_adv = 0.5;
  w.lambda_imgrecon = 2.0;
  w.lambda_feat = 3.0;
  const auto t = total_loss(f64({1.0})[0], f64({0.25})[0], f64({0.1})[0], w);
  EXPECT_NEAR(t.item<double>(), 0.5 + 0.5 + 0.3, 1e-12);
  LossWeights only_recon;
  only_recon.lambda_adv = 0;
  only_recon.lambda_feat = 0;
  EXPECT_NEAR(total_loss(f64({7.0})[0], f64({0.25})[0], f64({9.0})[0], only_recon).item<double>(), 0.25, 1e-12);
}

TEST(TotalLoss, NonFiniteComponentIsReported) {
  const auto nan = torch::tensor(std::numeric_limits<double>::quiet_NaN(), torch::kFloat64);
  const auto inf = torch::tensor(std::numeric_limits<double>::infinity(), torch::kFloat64);
  const auto one = torch::tensor(1.0, torch::kFloat64);
  for (const auto& args : {std::array{nan, one, one}, std::array{one, inf, one}, std::array{one, one, nan}}) {
    try {
      total_loss(args[0], args[1], args[2], LossWeights{});
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::NonFiniteComponent);
    }
  }
}

TEST(LossWeights, Validation) {
  LossWeights w;
  EXPECT_NO_THROW(w.validate());
  w.r1_interval = 0;
  EXPECT_THROW(w.validate(), Error);
  w = LossWeights{};
  w.gamma_r1 = -1;
  EXPECT_THROW(w.validate(), Error);
}
