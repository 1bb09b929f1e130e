// Analytic gradients against central finite differences on 16 px float64
// networks. Every parameter (score layer included) is re-drawn so no gradient
// is trivially zero.
#include <gtest/gtest.h>

#include "ffgan/losses.hpp"
#include "ffgan/networks.hpp"
#include "ffgan/rng.hpp"
#include "test_support.hpp"

using namespace ffgan;
using namespace ffgan::testing;

namespace {

constexpr double kSmoothTol = 1e-5;
constexpr double kKinkTol = 1e-4;  // losses with an absolute value inside

std::int64_t count(const std::vector<torch::Tensor>& ps) {
  std::int64_t n = 0;
  for (const auto& p : ps) n += p.numel();
  return n;
}

}  // namespace

TEST(Gradients, MiniatureNetworksAreSmall) {
  TinyNetworks t;
  EXPECT_LE(count(t.g->parameters()), 10000);
  EXPECT_LE(count(t.e->parameters()), 10000);
  EXPECT_LE(count(t.d->parameters()), 10000);
}

TEST(Gradients, DiscriminatorLoss) {
  TinyNetworks t;
  const auto fake = t.fake().detach();
  const double err = gradient_check([&] { return d_adv_loss(t.d->score(t.real), t.d->score(fake)); },
                                    t.d->parameters());
  EXPECT_LT(err, kSmoothTol);
}

TEST(Gradients, GeneratorLossThroughDiscriminator) {
  TinyNetworks t;
  const double err = gradient_check([&] { return g_adv_loss(t.d->score(t.fake())); }, t.g->parameters());
  EXPECT_LT(err, kSmoothTol);
}

TEST(Gradients, ReconstructionLossThroughEncoderAndGenerator) {
  TinyNetworks t;
  auto params = t.e->parameters();
  for (const auto& p : t.g->parameters()) params.push_back(p);
  const double err = gradient_check(
      [&] { return recon_loss(t.real, t.g->forward(uniform_schedule(t.e->forward(t.real), t.spec.site_count()))); },
      params);
  EXPECT_LT(err, kKinkTol);
}

TEST(Gradients, FeatureMatchingLoss) {
  TinyNetworks t;
  FeatureStack fx;
  {
    torch::NoGradGuard guard;
    fx = t.d->forward(t.real).features;
  }
  const double err =
      gradient_check([&] { return feature_match_loss(fx, t.d->forward(t.fake()).features); }, t.g->parameters());
  EXPECT_LT(err, kKinkTol);
}

TEST(Gradients, R1Penalty) {
  TinyNetworks t;
  const double err = gradient_check([&] { return r1_penalty(t.d, t.real, 10.0); }, t.d->parameters());
  EXPECT_LT(err, kSmoothTol);
}

TEST(Gradients, EndToEndGeneratorOutput) {
  TinyNetworks t;
  auto gen = torch_generator(6);
  const auto probe = torch::randn({4, 1, 16, 16}, gen, torch::TensorOptions().dtype(torch::kFloat64));
  auto w = t.w.clone().requires_grad_();
  auto params = t.g->parameters();
  params.push_back(w);
  const double err = gradient_check(
      [&] { return (t.g->forward(make_style_schedule(w, w.flip(0), 2, t.spec.site_count())) * probe).sum(); },
      params);
  EXPECT_LT(err, kSmoothTol);
}
