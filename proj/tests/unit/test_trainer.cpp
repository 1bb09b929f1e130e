#include <cmath>
#include <fstream>

#include <gtest/gtest.h>

#include "ffgan/checkpoint.hpp"
#include "ffgan/rng.hpp"
#include "ffgan/synth.hpp"
#include "ffgan/trainer.hpp"
#include "test_support.hpp"

using namespace ffgan;
using namespace ffgan::testing;

namespace {

constexpr double kOverfitPinnedRatio = 0.35;

TrainConfig tiny_config(std::uint64_t seed = 1) {
  TrainConfig c;
  c.network = tiny_spec();
  c.batch_size = 4;
  c.seed = seed;
  c.log_every = 1;
  return c;
}

std::vector<GlyphImage> synth_images(int n_fonts, int n_chars, int size, std::uint64_t seed = 1) {
  SynthRequest req;
  req.seed = seed;
  req.n_fonts = n_fonts;
  req.n_chars = n_chars;
  req.image_size = size;
  const auto dataset = synth_glyph_dataset(req);
  std::vector<GlyphImage> out;
  for (const auto* img : dataset.partition_images(Partition::Train)) out.push_back(*img);
  return out;
}

std::size_t count_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

}  // namespace

TEST(TrainConfig, ValidationAndJsonRoundTrip) {
  auto c = tiny_config(42);
  c.ema_decay = 0.5;
  c.weights.r1_interval = 4;
  const auto back = TrainConfig::from_json(c.to_json());
  EXPECT_EQ(back.network, c.network);
  EXPECT_EQ(back.seed, 42u);
  EXPECT_EQ(back.ema_decay, 0.5);
  EXPECT_EQ(back.weights.r1_interval, 4);
  EXPECT_EQ(back.to_json(), c.to_json());

  c.batch_size = 1;
  EXPECT_EQ(thrown_kind([&] { c.validate(); }), ErrorKind::Config);
  c = tiny_config();
  c.ema_decay = 1.5;
  EXPECT_EQ(thrown_kind([&] { c.validate(); }), ErrorKind::Config);
  EXPECT_EQ(thrown_kind([] { TrainConfig::from_json("{not json"); }), ErrorKind::Corrupt);
}

TEST(TrainState, FreshStateIsSeedDeterministic) {
  TrainState a(tiny_config(3)), b(tiny_config(3)), c(tiny_config(4));
  EXPECT_TRUE(same_state(a, b));
  EXPECT_FALSE(same_state(a, c));
  EXPECT_EQ(parameter_checksum(*a.g), parameter_checksum(*a.g_ema));
  EXPECT_TRUE(same_state(a, a.clone()));
}

TEST(Trainer, FreshDiscriminatorLossIsTwoLnTwo) {
  TrainConfig c;
  c.network = desk_spec();
  TrainState s(c);
  const auto m = adversarial_step(s, random_images(8, 32, 1));
  EXPECT_NEAR(m.d_loss, 2 * std::log(2.0), 1e-4);
  EXPECT_EQ(m.r1, 0.0);
}

TEST(Trainer, PathSeparation) {
  TrainState s(tiny_config());
  const auto batch = random_images(4, 16, 2);
  const auto e0 = parameter_checksum(*s.e), d0 = parameter_checksum(*s.d), g0 = parameter_checksum(*s.g);
  adversarial_step(s, batch);
  EXPECT_EQ(parameter_checksum(*s.e), e0);
  EXPECT_NE(parameter_checksum(*s.d), d0);
  EXPECT_NE(parameter_checksum(*s.g), g0);

  const auto d1 = parameter_checksum(*s.d), g1 = parameter_checksum(*s.g);
  reconstruction_step(s, batch);
  EXPECT_EQ(parameter_checksum(*s.d), d1);
  EXPECT_NE(parameter_checksum(*s.e), e0);
  EXPECT_NE(parameter_checksum(*s.g), g1);
}

TEST(Trainer, ReconstructionUsesOneStylePerImage) {
  // A reconstruction built from the (W, W, k) schedule matches the uniform
  // one for every k, so the step's loss does not depend on how it is built.
  TrainState s(tiny_config());
  const auto w = s.e->forward(random_images(2, 16, 3));
  const auto reference = s.g->forward(uniform_schedule(w, s.g->site_count()));
  for (int k = 0; k <= s.g->site_count(); ++k) {
    EXPECT_TRUE(bitwise_equal(s.g->forward(make_style_schedule(w, w, k, s.g->site_count())), reference));
  }
}

TEST(Trainer, StepIsDeterministic) {
  TrainState a(tiny_config()), b(tiny_config());
  const auto batch = random_images(4, 16, 5);
  for (int i = 0; i < 3; ++i) {
    const auto ma = train_iteration(a, batch), mb = train_iteration(b, batch);
    EXPECT_EQ(ma.csv_line(), mb.csv_line());
  }
  EXPECT_EQ(a.step, 3);
  EXPECT_TRUE(same_state(a, b));
}

TEST(Trainer, BatchPreconditions) {
  TrainState s(tiny_config());
  EXPECT_EQ(thrown_kind([&] { adversarial_step(s, random_images(1, 16, 1)); }), ErrorKind::BatchTooSmall);
  EXPECT_EQ(thrown_kind([&] { reconstruction_step(s, torch::zeros({0, 1, 16, 16})); }), ErrorKind::EmptyBatch);
}

TEST(Trainer, NonFiniteLossAbortsWithStep) {
  TrainState s(tiny_config());
  s.step = 7;
  {
    torch::NoGradGuard guard;
    for (auto& p : s.d->parameters()) p.fill_(std::nan(""));
  }
  try {
    adversarial_step(s, random_images(4, 16, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonFiniteLoss);
    EXPECT_NE(std::string(e.what()).find("7"), std::string::npos);
  }
}

// The lazy R1 term has zero gradient while D's score layer is zero, so the
// layer is given weight first. A step's D update depends on gamma only on
// steps divisible by the interval.
TEST(Trainer, LazyR1OnlyOnIntervalSteps) {
  TrainState base(tiny_config());
  {
    auto gen = torch_generator(9);
    torch::NoGradGuard guard;
    for (auto& p : base.d->out->parameters()) p.copy_(torch::randn(p.sizes(), gen));
  }
  const auto batch = random_images(4, 16, 6);
  for (std::int64_t step : {15, 16, 17, 31, 32, 48}) {
    TrainState with = base.clone(), without = base.clone();
    with.step = without.step = step;
    without.config.weights.gamma_r1 = 0.0;
    const auto m = adversarial_step(with, batch);
    adversarial_step(without, batch);
    const bool same_d = parameter_checksum(*with.d) == parameter_checksum(*without.d);
    EXPECT_EQ(same_d, step % 16 != 0) << "step " << step;
    EXPECT_EQ(m.r1 > 0.0, step % 16 == 0) << "step " << step;
  }
}

TEST(Ema, ClosedFormAlgebra) {
  Generator ema(tiny_spec()), params(tiny_spec());
  auto fill = [](Generator& g, double v) {
    torch::NoGradGuard guard;
    for (auto& p : g->parameters()) p.fill_(v);
  };
  fill(ema, 0.0);
  fill(params, 1.0);
  ema_update(*ema, *params, 0.999);
  for (const auto& p : ema->parameters()) EXPECT_NEAR(p.flatten()[0].item<double>(), 0.001, 1e-7);

  fill(ema, 0.25);
  ema_update(*ema, *params, 0.0);
  for (const auto& p : ema->parameters()) EXPECT_TRUE(torch::equal(p, torch::ones_like(p)));
  fill(ema, 0.25);
  ema_update(*ema, *params, 1.0);
  for (const auto& p : ema->parameters()) EXPECT_TRUE(torch::equal(p, torch::full_like(p, 0.25)));

  Generator other(desk_spec());
  EXPECT_EQ(thrown_kind([&] { ema_update(*ema, *other, 0.5); }), ErrorKind::ShapeMismatch);
}

TEST(Ema, EachStepFollowsTheRecurrence) {
  auto cfg = tiny_config();
  cfg.ema_decay = 0.9;
  TrainState s(cfg);
  const auto batch = random_images(4, 16, 8);
  for (int i = 0; i < 2; ++i) {
    const auto before = s.g_ema->parameters();
    std::vector<torch::Tensor> snap;
    for (const auto& p : before) snap.push_back(p.clone());
    adversarial_step(s, batch);
    const auto after = s.g_ema->parameters();
    const auto live = s.g->parameters();
    for (std::size_t j = 0; j < snap.size(); ++j) {
      const auto expected = snap[j] * 0.9 + live[j] * (1.0 - 0.9);
      EXPECT_LT((after[j] - expected).abs().max().item<double>(), 1e-6);
    }
  }
}

TEST(Trainer, MetricsLogLengthFollowsCadence) {
  TempDir dir("metrics");
  auto cfg = tiny_config();
  cfg.steps = 7;
  cfg.log_every = 3;
  const auto images = synth_images(2, 4, 16);
  const auto result = train(TrainState(cfg), images, {.out_dir = dir.path(), .on_log = {}});
  EXPECT_EQ(result.log.size(), 3u);  // ceil(7 / 3)
  EXPECT_EQ(count_lines(dir / "metrics.csv"), 3u);
  EXPECT_EQ(result.state.step, 7);
  EXPECT_TRUE(std::filesystem::exists(dir / "checkpoint.ffgc"));
  EXPECT_EQ(result.log[1].step, 3);
}

TEST(Trainer, CheckpointCadenceWritesNumberedFiles) {
  TempDir dir("cadence");
  auto cfg = tiny_config();
  cfg.steps = 5;
  cfg.checkpoint_every = 2;
  train(TrainState(cfg), synth_images(2, 4, 16), {.out_dir = dir.path(), .on_log = {}});
  EXPECT_TRUE(std::filesystem::exists(dir / "checkpoints" / "step_00000002.ffgc"));
  EXPECT_TRUE(std::filesystem::exists(dir / "checkpoints" / "step_00000004.ffgc"));
  EXPECT_FALSE(std::filesystem::exists(dir / "checkpoints" / "step_00000003.ffgc"));
}

TEST(Trainer, ResumeEqualsStraightRun) {
  TempDir dir("resume");
  const auto images = synth_images(2, 4, 16);
  auto cfg = tiny_config();
  cfg.steps = 20;
  const auto straight = train(TrainState(cfg), images);

  cfg.steps = 10;
  train(TrainState(cfg), images, {.out_dir = dir / "first", .on_log = {}});
  auto resumed_state = load_checkpoint(dir / "first" / "checkpoint.ffgc");
  EXPECT_EQ(resumed_state.step, 10);
  resumed_state.config.steps = 10;
  const auto resumed = train(std::move(resumed_state), images);
  EXPECT_EQ(resumed.state.step, 20);
  EXPECT_TRUE(same_state(straight.state, resumed.state));
}

TEST(Trainer, RejectsUnusableCorpora) {
  auto cfg = tiny_config();
  cfg.steps = 1;
  EXPECT_EQ(thrown_kind([&] { train(TrainState(cfg), synth_images(1, 1, 16)); }), ErrorKind::Config);
  EXPECT_EQ(thrown_kind([&] { train(TrainState(cfg), synth_images(1, 4, 32)); }), ErrorKind::Config);
  cfg.drop_last = false;
  // 5 images in batches of 4 would leave a single-image batch.
  EXPECT_EQ(thrown_kind([&] { train(TrainState(cfg), synth_images(1, 5, 16)); }), ErrorKind::Config);
}

// Overfit probe: 8 synthetic images at 32 px, 500 iterations. The pinned
// bound is the ratio reached by the reference run with some headroom.
TEST(Trainer, OverfitProbe) {
  TrainConfig cfg;
  cfg.network = desk_spec();
  cfg.batch_size = 8;
  cfg.steps = 500;
  cfg.seed = 1;
  cfg.log_every = 500;
  const auto images = synth_images(2, 4, 32);
  ASSERT_EQ(images.size(), 8u);
  TrainState state(cfg);
  const auto batch = stack_images(std::span<const GlyphImage>(images));
  auto probe = state.clone();
  const double before = reconstruction_step(probe, batch).recon;
  auto result = train(std::move(state), images);
  const double after = reconstruction_step(result.state, batch).recon;
  RecordProperty("recon_before", std::to_string(before));
  RecordProperty("recon_after", std::to_string(after));
  EXPECT_LT(after, 0.5 * before);
  EXPECT_LT(after / before, kOverfitPinnedRatio);
}
