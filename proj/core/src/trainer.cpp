#include "ffgan/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <json.hpp>

#include "ffgan/batch_iterator.hpp"
#include "ffgan/checkpoint.hpp"
#include "ffgan/errors.hpp"
#include "ffgan/rng.hpp"

namespace ffgan {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

torch::optim::AdamOptions adam_options(const TrainConfig& c) {
  return torch::optim::AdamOptions(c.learning_rate).betas({c.beta1, c.beta2}).eps(c.adam_eps);
}

void check_finite(double value, const char* what, std::int64_t step) {
  if (!std::isfinite(value)) {
    fail(ErrorKind::NonFiniteLoss, std::string(what) + " became " + std::to_string(value) + " at step " +
                                       std::to_string(step));
  }
}

// Gradients of `loss` w.r.t. exactly `params`, applied by `opt`. Other
// parameters in the graph never receive a .grad.
void apply_gradients(torch::optim::Adam& opt, const std::vector<torch::Tensor>& params, const torch::Tensor& loss) {
  auto grads = torch::autograd::grad({loss}, params, /*grad_outputs=*/{}, /*retain_graph=*/false,
                                     /*create_graph=*/false, /*allow_unused=*/true);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i];
    p.mutable_grad() = grads[i].defined() ? grads[i] : torch::zeros_like(p);
  }
  opt.step();
  for (auto p : params) p.mutable_grad() = torch::Tensor();
}

std::vector<torch::Tensor> params_of(const torch::nn::Module& m) { return m.parameters(/*recurse=*/true); }

torch::Tensor match_dtype(const torch::Tensor& images, const torch::nn::Module& like) {
  const auto params = like.parameters();
  return params.empty() ? images : images.to(params.front().scalar_type());
}

template <typename Holder>
void append_module(std::vector<std::pair<std::string, torch::Tensor>>& out, const std::string& prefix,
                   const Holder& module) {
  for (const auto& p : module->named_parameters(/*recurse=*/true)) out.emplace_back(prefix + "." + p.key(), p.value());
}

void append_optimizer(std::vector<std::pair<std::string, torch::Tensor>>& out, const std::string& prefix,
                      const torch::optim::Adam& opt, const torch::nn::Module& module) {
  const auto& states = opt.state();
  for (const auto& p : module.named_parameters(/*recurse=*/true)) {
    auto it = states.find(p.value().unsafeGetTensorImpl());
    if (it == states.end()) continue;
    const auto& s = static_cast<const torch::optim::AdamParamState&>(*it->second);
    const std::string base = prefix + "." + p.key();
    out.emplace_back(base + ".exp_avg", s.exp_avg());
    out.emplace_back(base + ".exp_avg_sq", s.exp_avg_sq());
    out.emplace_back(base + ".step", torch::tensor(s.step(), torch::kInt64));
  }
}

void load_module(const std::map<std::string, torch::Tensor>& entries, const std::string& prefix,
                 torch::nn::Module& module) {
  torch::NoGradGuard guard;
  for (auto& p : module.named_parameters(/*recurse=*/true)) {
    const std::string name = prefix + "." + p.key();
    auto it = entries.find(name);
    if (it == entries.end()) fail(ErrorKind::Corrupt, "checkpoint lacks '" + name + "'");
    if (it->second.sizes() != p.value().sizes()) fail(ErrorKind::Corrupt, "checkpoint entry '" + name + "' has the wrong shape");
    p.value().copy_(it->second);
  }
}

void load_optimizer(const std::map<std::string, torch::Tensor>& entries, const std::string& prefix,
                    torch::optim::Adam& opt, const torch::nn::Module& module) {
  auto& states = opt.state();
  states.clear();
  for (const auto& p : module.named_parameters(/*recurse=*/true)) {
    const std::string base = prefix + "." + p.key();
    auto avg = entries.find(base + ".exp_avg");
    auto avg_sq = entries.find(base + ".exp_avg_sq");
    auto step = entries.find(base + ".step");
    const int present = (avg != entries.end()) + (avg_sq != entries.end()) + (step != entries.end());
    if (present == 0) continue;
    if (present != 3) fail(ErrorKind::Corrupt, "incomplete optimizer state for '" + base + "'");
    if (avg->second.sizes() != p.value().sizes() || avg_sq->second.sizes() != p.value().sizes()) {
      fail(ErrorKind::Corrupt, "optimizer state for '" + base + "' has the wrong shape");
    }
    auto s = std::make_unique<torch::optim::AdamParamState>();
    s->step(step->second.item<std::int64_t>());
    s->exp_avg(avg->second.clone());
    s->exp_avg_sq(avg_sq->second.clone());
    states[p.value().unsafeGetTensorImpl()] = std::move(s);
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

// --- TrainConfig -------------------------------------------------------------

void TrainConfig::validate() const {
  network.validate();
  weights.validate();
  if (batch_size < 2) fail(ErrorKind::Config, "batch_size must be >= 2 (minibatch stddev needs companions)");
  if (steps < 0) fail(ErrorKind::Config, "steps must be non-negative");
  if (!(learning_rate > 0)) fail(ErrorKind::Config, "learning_rate must be positive");
  if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1) fail(ErrorKind::Config, "Adam betas must lie in [0, 1)");
  if (!(adam_eps > 0)) fail(ErrorKind::Config, "adam_eps must be positive");
  if (ema_decay < 0 || ema_decay > 1) fail(ErrorKind::Config, "ema_decay must lie in [0, 1]");
  if (mixing_prob < 0 || mixing_prob > 1) fail(ErrorKind::Config, "mixing_prob must lie in [0, 1]");
  if (log_every < 1) fail(ErrorKind::Config, "log_every must be >= 1");
  if (checkpoint_every < 0) fail(ErrorKind::Config, "checkpoint_every must be >= 0");
}

std::string TrainConfig::to_json() const {
  json j;
  j["network"] = {{"image_size", network.image_size},
                  {"style_dim", network.style_dim},
                  {"channels", network.channels_string()}};
  j["batch_size"] = batch_size;
  j["learning_rate"] = learning_rate;
  j["beta1"] = beta1;
  j["beta2"] = beta2;
  j["adam_eps"] = adam_eps;
  j["weights"] = {{"lambda_adv", weights.lambda_adv},
                  {"lambda_imgrecon", weights.lambda_imgrecon},
                  {"lambda_feat", weights.lambda_feat},
                  {"gamma_r1", weights.gamma_r1},
                  {"r1_interval", weights.r1_interval}};
  j["ema_decay"] = ema_decay;
  j["mixing_prob"] = mixing_prob;
  j["seed"] = seed;
  j["log_every"] = log_every;
  j["checkpoint_every"] = checkpoint_every;
  j["drop_last"] = drop_last;
  return j.dump();
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  TrainConfig c;
  try {
    const json j = json::parse(text);
    const auto& n = j.at("network");
    c.network.image_size = n.at("image_size").get<int>();
    c.network.style_dim = n.at("style_dim").get<int>();
    c.network.channels = NetworkSpec::parse_channels(n.at("channels").get<std::string>());
    c.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("steps")) c.steps = j.at("steps").get<std::int64_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.adam_eps = j.at("adam_eps").get<double>();
    const auto& w = j.at("weights");
    c.weights.lambda_adv = w.at("lambda_adv").get<double>();
    c.weights.lambda_imgrecon = w.at("lambda_imgrecon").get<double>();
    c.weights.lambda_feat = w.at("lambda_feat").get<double>();
    c.weights.gamma_r1 = w.at("gamma_r1").get<double>();
    c.weights.r1_interval = w.at("r1_interval").get<int>();
    c.ema_decay = j.at("ema_decay").get<double>();
    c.mixing_prob = j.at("mixing_prob").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.log_every = j.at("log_every").get<std::int64_t>();
    c.checkpoint_every = j.at("checkpoint_every").get<std::int64_t>();
    c.drop_last = j.at("drop_last").get<bool>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Corrupt, std::string("train config JSON: ") + e.what());
  }
  return c;
}

// --- TrainState ----------------------------------------------------------------

TrainState::TrainState(TrainConfig cfg) : config(std::move(cfg)) {
  config.validate();
  g = Generator(config.network);
  e = Encoder(config.network);
  d = Discriminator(config.network);
  auto gen_g = torch_generator(fork_seed(config.seed, "init.g"));
  auto gen_e = torch_generator(fork_seed(config.seed, "init.e"));
  auto gen_d = torch_generator(fork_seed(config.seed, "init.d"));
  g->initialize(gen_g);
  e->initialize(gen_e);
  d->initialize(gen_d);
  g_ema = std::dynamic_pointer_cast<GeneratorImpl>(g->clone());
  for (auto& p : g_ema->parameters()) p.requires_grad_(false);
  make_optimizers();
}

TrainState::TrainState(TrainState&&) noexcept = default;
TrainState& TrainState::operator=(TrainState&&) noexcept = default;
TrainState::~TrainState() = default;

void TrainState::make_optimizers() {
  opt_g = std::make_unique<torch::optim::Adam>(g->parameters(), adam_options(config));
  opt_e = std::make_unique<torch::optim::Adam>(e->parameters(), adam_options(config));
  opt_d = std::make_unique<torch::optim::Adam>(d->parameters(), adam_options(config));
}

TrainState TrainState::clone() const {
  TrainState copy(config);
  std::vector<std::pair<std::string, torch::Tensor>> entries;
  for (auto& [name, t] : named_tensors()) entries.emplace_back(name, t.detach().clone());
  copy.load_named_tensors(entries);
  return copy;
}

std::vector<std::pair<std::string, torch::Tensor>> TrainState::named_tensors() const {
  std::vector<std::pair<std::string, torch::Tensor>> out;
  append_module(out, "g", g);
  append_module(out, "g_ema", g_ema);
  append_module(out, "e", e);
  append_module(out, "d", d);
  append_optimizer(out, "opt_g", *opt_g, *g);
  append_optimizer(out, "opt_e", *opt_e, *e);
  append_optimizer(out, "opt_d", *opt_d, *d);
  out.emplace_back("state.step", torch::tensor(step, torch::kInt64));
  return out;
}

void TrainState::load_named_tensors(const std::vector<std::pair<std::string, torch::Tensor>>& entries) {
  std::map<std::string, torch::Tensor> by_name;
  for (const auto& [name, t] : entries) {
    if (!by_name.emplace(name, t).second) fail(ErrorKind::Corrupt, "duplicate entry '" + name + "'");
  }
  load_module(by_name, "g", *g);
  load_module(by_name, "g_ema", *g_ema);
  load_module(by_name, "e", *e);
  load_module(by_name, "d", *d);
  load_optimizer(by_name, "opt_g", *opt_g, *g);
  load_optimizer(by_name, "opt_e", *opt_e, *e);
  load_optimizer(by_name, "opt_d", *opt_d, *d);
  auto it = by_name.find("state.step");
  if (it == by_name.end()) fail(ErrorKind::Corrupt, "checkpoint lacks 'state.step'");
  step = it->second.item<std::int64_t>();
}

std::string StepMetrics::csv_line() const {
  return std::to_string(step) + "," + format_double(d_loss) + "," + format_double(g_loss) + "," + format_double(r1) +
         "," + format_double(recon) + "," + format_double(featmatch) + "," + std::to_string(k);
}

// --- steps -----------------------------------------------------------------------

void ema_update(torch::nn::Module& ema, const torch::nn::Module& params, double decay) {
  if (decay < 0.0 || decay > 1.0) fail(ErrorKind::InvalidArgument, "ema decay must lie in [0, 1]");
  auto ema_params = ema.named_parameters(true);
  const auto src_params = params.named_parameters(true);
  if (ema_params.size() != src_params.size()) fail(ErrorKind::ShapeMismatch, "EMA and source parameter counts differ");
  torch::NoGradGuard guard;
  for (std::size_t i = 0; i < ema_params.size(); ++i) {
    auto& dst = ema_params[i];
    const auto& src = src_params[i];
    if (dst.key() != src.key() || dst.value().sizes() != src.value().sizes()) {
      fail(ErrorKind::ShapeMismatch, "EMA parameter '" + dst.key() + "' does not match '" + src.key() + "'");
    }
    dst.value().mul_(decay).add_(src.value(), 1.0 - decay);
  }
}

StepMetrics adversarial_step(TrainState& state, const torch::Tensor& real_batch) {
  const auto& cfg = state.config;
  if (real_batch.dim() != 4 || real_batch.size(0) < 2) {
    fail(ErrorKind::BatchTooSmall, "adversarial step needs at least 2 images per batch");
  }
  const auto real = match_dtype(real_batch, *state.d);
  const auto n = real.size(0);
  const int sites = state.g->site_count();
  StepMetrics m;
  m.step = state.step;

  auto gen = torch_generator(fork_seed(cfg.seed, "adv.z", static_cast<std::uint64_t>(state.step)));
  std::mt19937_64 rng(fork_seed(cfg.seed, "adv.k", static_cast<std::uint64_t>(state.step)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  m.k = sites;
  if (sites > 1 && unit(rng) < cfg.mixing_prob) m.k = std::uniform_int_distribution<int>(1, sites - 1)(rng);
  const auto opts = real.options();
  auto draw_schedule = [&] {
    auto z1 = torch::randn({n, cfg.network.style_dim}, gen, opts);
    auto z2 = torch::randn({n, cfg.network.style_dim}, gen, opts);
    return make_style_schedule(z1, z2, m.k, sites);
  };

  // Discriminator.
  torch::Tensor fake;
  {
    torch::NoGradGuard guard;
    fake = state.g->forward(draw_schedule());
  }
  auto d_loss = d_adv_loss(state.d->score(real), state.d->score(fake));
  m.d_loss = d_loss.item<double>();
  check_finite(m.d_loss, "discriminator loss", state.step);
  auto d_total = cfg.weights.lambda_adv * d_loss;
  if (cfg.weights.gamma_r1 > 0 && state.step % cfg.weights.r1_interval == 0) {
    auto r1 = r1_penalty(state.d, real, cfg.weights.gamma_r1);
    m.r1 = r1.item<double>();
    check_finite(m.r1, "R1 penalty", state.step);
    d_total = d_total + r1 * static_cast<double>(cfg.weights.r1_interval);
  }
  apply_gradients(*state.opt_d, params_of(*state.d), d_total);

  // Generator, on fresh fakes against the updated discriminator.
  auto g_loss = g_adv_loss(state.d->score(state.g->forward(draw_schedule())));
  m.g_loss = g_loss.item<double>();
  check_finite(m.g_loss, "generator loss", state.step);
  apply_gradients(*state.opt_g, params_of(*state.g), cfg.weights.lambda_adv * g_loss);
  ema_update(*state.g_ema, *state.g, cfg.ema_decay);
  return m;
}

StepMetrics reconstruction_step(TrainState& state, const torch::Tensor& real_batch) {
  const auto& cfg = state.config;
  if (real_batch.dim() != 4 || real_batch.size(0) < 1) fail(ErrorKind::EmptyBatch, "reconstruction step needs images");
  const auto real = match_dtype(real_batch, *state.e);
  StepMetrics m;
  m.step = state.step;
  m.k = state.g->site_count();

  auto w = state.e->forward(real);
  auto y = state.g->forward(uniform_schedule(w, state.g->site_count()));
  FeatureStack fx;
  {
    torch::NoGradGuard guard;
    fx = state.d->forward(real).features;
  }
  auto fy = state.d->forward(y).features;
  auto recon = recon_loss(real, y);
  auto feat = feature_match_loss(fx, fy);
  m.recon = recon.item<double>();
  m.featmatch = feat.item<double>();
  check_finite(m.recon, "reconstruction loss", state.step);
  check_finite(m.featmatch, "feature matching loss", state.step);

  auto loss = total_loss(torch::zeros({}, recon.options()), recon, feat, cfg.weights);
  auto g_params = params_of(*state.g);
  auto e_params = params_of(*state.e);
  std::vector<torch::Tensor> all = e_params;
  all.insert(all.end(), g_params.begin(), g_params.end());
  auto grads = torch::autograd::grad({loss}, all, {}, false, false, /*allow_unused=*/true);
  for (std::size_t i = 0; i < all.size(); ++i) {
    all[i].mutable_grad() = grads[i].defined() ? grads[i] : torch::zeros_like(all[i]);
  }
  state.opt_e->step();
  state.opt_g->step();
  for (auto& p : all) p.mutable_grad() = torch::Tensor();
  ema_update(*state.g_ema, *state.g, cfg.ema_decay);
  return m;
}

StepMetrics train_iteration(TrainState& state, const torch::Tensor& real_batch) {
  StepMetrics m = adversarial_step(state, real_batch);
  const StepMetrics r = reconstruction_step(state, real_batch);
  m.recon = r.recon;
  m.featmatch = r.featmatch;
  ++state.step;
  return m;
}

// --- run loop -------------------------------------------------------------------

TrainResult train(TrainState state, std::vector<GlyphImage> images, const TrainRunOptions& options) {
  const TrainConfig& cfg = state.config;
  if (images.empty()) fail(ErrorKind::EmptyPartition, "training partition is empty");
  for (const auto& img : images) {
    if (img.size != cfg.network.image_size) {
      fail(ErrorKind::Config, "corpus images are " + std::to_string(img.size) + " px but the model expects " +
                                  std::to_string(cfg.network.image_size));
    }
  }
  if (images.size() < 2 || (!cfg.drop_last && images.size() % cfg.batch_size == 1)) {
    fail(ErrorKind::Config, "batching " + std::to_string(images.size()) + " images by " +
                                std::to_string(cfg.batch_size) + " leaves a single-image batch");
  }
  BatchIterator batches(std::move(images), BatchOptions{.batch_size = cfg.batch_size,
                                                        .seed = fork_seed(cfg.seed, "data"),
                                                        .drop_last = cfg.drop_last,
                                                        .prefetch = true});
  batches.seek(static_cast<std::uint64_t>(state.step));

  std::ofstream metrics;
  if (!options.out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(options.out_dir, ec);
    if (ec) fail(ErrorKind::Io, "cannot create '" + options.out_dir.string() + "': " + ec.message());
    metrics.open(options.out_dir / "metrics.csv", std::ios::app);
    if (!metrics) fail(ErrorKind::Io, "cannot open metrics log in '" + options.out_dir.string() + "'");
  }

  std::vector<StepMetrics> log;
  for (std::int64_t i = 0; i < cfg.steps; ++i) {
    const auto batch = batches.next();
    const StepMetrics m = train_iteration(state, batch->pixels);
    if (m.step % cfg.log_every == 0) {
      log.push_back(m);
      if (metrics.is_open()) metrics << m.csv_line() << "\n" << std::flush;
      if (options.on_log) options.on_log(m);
    }
    if (!options.out_dir.empty() && cfg.checkpoint_every > 0 && state.step % cfg.checkpoint_every == 0) {
      char name[40];
      std::snprintf(name, sizeof name, "step_%08lld.ffgc", static_cast<long long>(state.step));
      std::error_code ec;
      fs::create_directories(options.out_dir / "checkpoints", ec);
      save_checkpoint(state, options.out_dir / "checkpoints" / name);
    }
  }
  if (!options.out_dir.empty()) save_checkpoint(state, options.out_dir / "checkpoint.ffgc");
  return TrainResult{std::move(state), std::move(log)};
}

TrainResult train(const TrainConfig& config, const FontDataset& dataset, const TrainRunOptions& options) {
  std::vector<GlyphImage> images;
  for (const GlyphImage* img : dataset.partition_images(Partition::Train)) images.push_back(*img);
  return train(TrainState(config), std::move(images), options);
}

}  // namespace ffgan
