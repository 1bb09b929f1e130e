#include <benchmark/benchmark.h>

#include "ffgan/losses.hpp"
#include "ffgan/networks.hpp"
#include "ffgan/rasterize.hpp"
#include "ffgan/rng.hpp"
#include "ffgan/synth.hpp"
#include "ffgan/trainer.hpp"

using namespace ffgan;

namespace {

NetworkSpec spec_for(int size) {
  NetworkSpec s;
  s.image_size = size;
  return s;
}

torch::Tensor images(std::int64_t n, int size) {
  auto gen = torch_generator(1);
  return torch::rand({n, 1, size, size}, gen) * 2 - 1;
}

void BM_Adain(benchmark::State& state) {
  const auto c = state.range(0);
  auto gen = torch_generator(1);
  const auto x = torch::randn({8, c, 32, 32}, gen);
  const auto scale = torch::ones({8, c}), bias = torch::zeros({8, c});
  for (auto _ : state) benchmark::DoNotOptimize(adain(x, scale, bias));
}
BENCHMARK(BM_Adain)->Arg(16)->Arg(64);

void BM_GeneratorForward(benchmark::State& state) {
  torch::NoGradGuard guard;
  const int size = static_cast<int>(state.range(0));
  Generator g(spec_for(size));
  auto gen = torch_generator(1);
  g->initialize(gen);
  const auto w = torch::randn({8, 64}, gen);
  for (auto _ : state) benchmark::DoNotOptimize(g->forward(uniform_schedule(w, g->site_count())));
}
BENCHMARK(BM_GeneratorForward)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_DiscriminatorForward(benchmark::State& state) {
  torch::NoGradGuard guard;
  const int size = static_cast<int>(state.range(0));
  Discriminator d(spec_for(size));
  auto gen = torch_generator(1);
  d->initialize(gen);
  const auto x = images(8, size);
  for (auto _ : state) benchmark::DoNotOptimize(d->forward(x));
}
BENCHMARK(BM_DiscriminatorForward)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_TrainIterationDesk(benchmark::State& state) {
  TrainConfig cfg;
  cfg.network = spec_for(32);
  TrainState s(cfg);
  const auto x = images(8, 32);
  for (auto _ : state) benchmark::DoNotOptimize(train_iteration(s, x));
}
BENCHMARK(BM_TrainIterationDesk)->Unit(benchmark::kMillisecond);

void BM_RasterizeGlyph(benchmark::State& state) {
  const auto font = FontFile::open(FFGAN_FIXTURE_DIR "/fixture_printed.ttf");
  const int size = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(font.rasterize(U'A', size));
}
BENCHMARK(BM_RasterizeGlyph)->Arg(32)->Arg(128);

void BM_SynthCorpus(benchmark::State& state) {
  SynthRequest req;
  req.seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(synth_glyph_dataset(req));
}
BENCHMARK(BM_SynthCorpus)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
