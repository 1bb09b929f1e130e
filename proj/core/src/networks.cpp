#include "ffgan/networks.hpp"

#include <cmath>
#include <sstream>

#include "ffgan/errors.hpp"

namespace ffgan {
namespace F = torch::nn::functional;

namespace {

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

int log2_int(int v) {
  int n = 0;
  while (v > 1) {
    v >>= 1;
    ++n;
  }
  return n;
}

void check_image_batch(const torch::Tensor& images, int size, const char* who) {
  if (images.dim() != 4 || images.size(1) != 1 || images.size(2) != size || images.size(3) != size) {
    std::ostringstream msg;
    msg << who << " expects N x 1 x " << size << " x " << size << " images, got " << images.sizes();
    fail(ErrorKind::ShapeMismatch, msg.str());
  }
  if (images.size(0) < 1) fail(ErrorKind::EmptyBatch, std::string(who) + " got an empty batch");
}

torch::Tensor as_batch(const torch::Tensor& images) { return images.dim() == 3 ? images.unsqueeze(0) : images; }

}  // namespace

// --- NetworkSpec -------------------------------------------------------------

int NetworkSpec::block_count() const { return log2_int(image_size / 4) + 1; }

int NetworkSpec::site_count() const { return block_count() + 1; }

int NetworkSpec::channels_at(int resolution) const {
  auto it = channels.find(resolution);
  if (it == channels.end()) {
    fail(ErrorKind::Config, "no channel count configured for resolution " + std::to_string(resolution));
  }
  return it->second;
}

void NetworkSpec::validate() const {
  if (image_size < 16 || !is_power_of_two(image_size)) {
    fail(ErrorKind::Config, "image_size must be a power of two >= 16, got " + std::to_string(image_size));
  }
  if (style_dim < 1) fail(ErrorKind::Config, "style_dim must be positive");
  int previous = 0;
  for (int r = 4; r <= image_size; r *= 2) {
    const int c = channels_at(r);
    if (c < 1) fail(ErrorKind::Config, "channel counts must be positive");
    if (previous && c > previous) {
      fail(ErrorKind::Config, "channel schedule must be non-increasing with resolution (at " + std::to_string(r) + ")");
    }
    previous = c;
  }
}

std::string NetworkSpec::channels_string() const {
  std::ostringstream out;
  bool first = true;
  for (const auto& [res, ch] : channels) {
    out << (first ? "" : ",") << res << ":" << ch;
    first = false;
  }
  return out.str();
}

std::map<int, int> NetworkSpec::parse_channels(const std::string& text) {
  std::map<int, int> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) fail(ErrorKind::Config, "channel entry '" + item + "' is not res:channels");
    try {
      std::size_t used_r = 0, used_c = 0;
      const std::string res_text = item.substr(0, colon), ch_text = item.substr(colon + 1);
      const int res = std::stoi(res_text, &used_r);
      const int ch = std::stoi(ch_text, &used_c);
      if (used_r != res_text.size() || used_c != ch_text.size()) throw std::invalid_argument(item);
      out[res] = ch;
    } catch (const std::exception&) {
      fail(ErrorKind::Config, "channel entry '" + item + "' is not res:channels");
    }
  }
  if (out.empty()) fail(ErrorKind::Config, "empty channel schedule");
  return out;
}

// --- functional pieces -------------------------------------------------------

torch::Tensor leaky_act(const torch::Tensor& x) { return F::leaky_relu(x, F::LeakyReLUFuncOptions().negative_slope(0.2)) * std::sqrt(2.0); }

torch::Tensor adain(const torch::Tensor& x, const torch::Tensor& scale, const torch::Tensor& bias, double eps) {
  if (eps <= 0.0) fail(ErrorKind::InvalidArgument, "adain eps must be positive");
  const bool unbatched = x.dim() == 3;
  const auto xb = unbatched ? x.unsqueeze(0) : x;
  const auto sb = scale.dim() == 1 ? scale.unsqueeze(0) : scale;
  const auto bb = bias.dim() == 1 ? bias.unsqueeze(0) : bias;
  if (xb.dim() != 4 || sb.dim() != 2 || bb.dim() != 2 || sb.size(1) != xb.size(1) || bb.size(1) != xb.size(1) ||
      (sb.size(0) != xb.size(0) && sb.size(0) != 1) || sb.sizes() != bb.sizes()) {
    std::ostringstream msg;
    msg << "adain shapes: features " << x.sizes() << ", scale " << scale.sizes() << ", bias " << bias.sizes();
    fail(ErrorKind::ShapeMismatch, msg.str());
  }
  const auto mean = xb.mean({2, 3}, /*keepdim=*/true);
  const auto centered = xb - mean;
  const auto var = centered.pow(2).mean({2, 3}, /*keepdim=*/true);
  const auto normalized = centered / torch::sqrt(var + eps);
  const auto out = sb.unsqueeze(-1).unsqueeze(-1) * normalized + bb.unsqueeze(-1).unsqueeze(-1);
  return unbatched ? out.squeeze(0) : out;
}

torch::Tensor minibatch_stddev(const torch::Tensor& x) {
  const auto n = x.size(0), c = x.size(1), h = x.size(2), w = x.size(3);
  std::int64_t group = std::min<std::int64_t>(4, n);
  while (n % group != 0) --group;
  const auto m = n / group;
  auto y = x.reshape({group, m, c, h, w});
  y = y - y.mean(0, /*keepdim=*/true);
  y = torch::sqrt(y.pow(2).mean(0) + 1e-8);  // m x c x h x w
  y = y.mean({1, 2, 3});                     // m
  y = y.reshape({1, m, 1, 1, 1}).expand({group, m, 1, h, w}).reshape({n, 1, h, w});
  return torch::cat({x, y}, 1);
}

// --- equalized layers --------------------------------------------------------

EqualizedLinearImpl::EqualizedLinearImpl(int in_features, int out_features, torch::Tensor bias_init, bool zero_weight)
    : in_features_(in_features), out_features_(out_features), bias_init_(std::move(bias_init)), zero_weight_(zero_weight) {
  reset();
}

void EqualizedLinearImpl::reset() {
  weight = register_parameter("weight", torch::zeros({out_features_, in_features_}));
  bias = register_parameter("bias", torch::zeros({out_features_}));
}

void EqualizedLinearImpl::initialize(at::Generator& gen) {
  torch::NoGradGuard guard;
  if (zero_weight_) {
    weight.zero_();
  } else {
    weight.copy_(torch::randn(weight.sizes(), gen, weight.options()));
  }
  if (bias_init_.defined()) {
    bias.copy_(bias_init_.to(bias.options()));
  } else {
    bias.zero_();
  }
}

torch::Tensor EqualizedLinearImpl::forward(const torch::Tensor& x) const {
  return torch::nn::functional::linear(x, weight * (1.0 / std::sqrt(static_cast<double>(in_features_))), bias);
}

EqualizedConv2dImpl::EqualizedConv2dImpl(int in_channels, int out_channels, int kernel)
    : in_channels_(in_channels), out_channels_(out_channels), kernel_(kernel) {
  reset();
}

void EqualizedConv2dImpl::reset() {
  weight = register_parameter("weight", torch::zeros({out_channels_, in_channels_, kernel_, kernel_}));
  bias = register_parameter("bias", torch::zeros({out_channels_}));
}

void EqualizedConv2dImpl::initialize(at::Generator& gen) {
  torch::NoGradGuard guard;
  weight.copy_(torch::randn(weight.sizes(), gen, weight.options()));
  bias.zero_();
}

torch::Tensor EqualizedConv2dImpl::forward(const torch::Tensor& x) const {
  const double scale = 1.0 / std::sqrt(static_cast<double>(in_channels_ * kernel_ * kernel_));
  return torch::conv2d(x, weight * scale, bias, /*stride=*/1, /*padding=*/kernel_ / 2);
}

void initialize_module(torch::nn::Module& module, at::Generator& gen) {
  auto visit = [&gen](torch::nn::Module& m) {
    if (auto* lin = m.as<EqualizedLinearImpl>()) lin->initialize(gen);
    if (auto* conv = m.as<EqualizedConv2dImpl>()) conv->initialize(gen);
  };
  visit(module);
  for (const auto& child : module.modules(/*include_self=*/false)) visit(*child);
}

// --- style affine and schedules ----------------------------------------------

StyleAffineImpl::StyleAffineImpl(int style_dim, int channels) : style_dim_(style_dim), channels_(channels) { reset(); }

void StyleAffineImpl::reset() {
  auto bias_init = torch::cat({torch::ones({channels_}), torch::zeros({channels_})});
  affine = register_module("affine", EqualizedLinear(style_dim_, 2 * channels_, bias_init));
}

std::pair<torch::Tensor, torch::Tensor> StyleAffineImpl::forward(const torch::Tensor& w) const {
  if (w.size(-1) != style_dim_) {
    fail(ErrorKind::ShapeMismatch, "style vector of length " + std::to_string(w.size(-1)) + ", site expects " +
                                       std::to_string(style_dim_));
  }
  auto out = affine->forward(w);
  auto parts = out.split(channels_, -1);
  return {parts[0], parts[1]};
}

StyleSchedule make_style_schedule(const torch::Tensor& w1, const torch::Tensor& w2, int k, int sites) {
  if (k < 0 || k > sites) {
    fail(ErrorKind::IndexOutOfRange, "inject index " + std::to_string(k) + " outside [0, " + std::to_string(sites) + "]");
  }
  const auto a = w1.dim() == 1 ? w1.unsqueeze(0) : w1;
  const auto b = w2.dim() == 1 ? w2.unsqueeze(0) : w2;
  if (a.dim() != 2 || a.sizes() != b.sizes()) {
    std::ostringstream msg;
    msg << "style vectors must share a shape, got " << w1.sizes() << " and " << w2.sizes();
    fail(ErrorKind::ShapeMismatch, msg.str());
  }
  const auto n = a.size(0), d = a.size(1);
  auto first = a.unsqueeze(1).expand({n, k, d});
  auto second = b.unsqueeze(1).expand({n, sites - k, d});
  return StyleSchedule{torch::cat({first, second}, 1)};
}

StyleSchedule uniform_schedule(const torch::Tensor& w, int sites) { return make_style_schedule(w, w, sites, sites); }

// --- generator -----------------------------------------------------------------

StyledConvImpl::StyledConvImpl(int in_channels, int out_channels, int style_dim)
    : in_channels_(in_channels), out_channels_(out_channels), style_dim_(style_dim) {
  reset();
}

void StyledConvImpl::reset() {
  conv = register_module("conv", EqualizedConv2d(in_channels_, out_channels_, 3));
  style = register_module("style", StyleAffine(style_dim_, out_channels_));
}

torch::Tensor StyledConvImpl::forward(const torch::Tensor& x, const torch::Tensor& w) const {
  auto [scale, bias] = style->forward(w);
  return adain(leaky_act(conv->forward(x)), scale, bias);
}

GeneratorImpl::GeneratorImpl(NetworkSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  reset();
}

void GeneratorImpl::reset() {
  blocks_.clear();
  const int c4 = spec_.channels_at(4);
  const_input_ = register_parameter("const", torch::zeros({1, c4, 4, 4}));
  int block = 0;
  for (int r = 4; r <= spec_.image_size; r *= 2, ++block) {
    const int in = r == 4 ? c4 : spec_.channels_at(r / 2);
    blocks_.push_back(register_module("block" + std::to_string(block),
                                      StyledConv(in, spec_.channels_at(r), spec_.style_dim)));
  }
  const int c_out = spec_.channels_at(spec_.image_size);
  blocks_.push_back(register_module("final", StyledConv(c_out, c_out, spec_.style_dim)));
  to_image_ = register_module("to_image", EqualizedConv2d(c_out, 1, 1));
}

void GeneratorImpl::initialize(at::Generator& gen) {
  {
    torch::NoGradGuard guard;
    const_input_.copy_(torch::randn(const_input_.sizes(), gen, const_input_.options()));
  }
  initialize_module(*this, gen);
}

const StyleAffineImpl& GeneratorImpl::site(int index) const {
  if (index < 0 || index >= static_cast<int>(blocks_.size())) {
    fail(ErrorKind::IndexOutOfRange, "site " + std::to_string(index) + " does not exist");
  }
  return *blocks_[index]->style;
}

torch::Tensor GeneratorImpl::forward(const StyleSchedule& schedule) const {
  const auto& styles = schedule.per_site;
  if (!styles.defined() || styles.dim() != 3 || styles.size(1) != site_count()) {
    std::ostringstream msg;
    msg << "generator has " << site_count() << " style sites, schedule is "
        << (styles.defined() ? styles.sizes() : torch::IntArrayRef{});
    fail(ErrorKind::ScheduleLengthMismatch, msg.str());
  }
  if (styles.size(2) != spec_.style_dim) fail(ErrorKind::ShapeMismatch, "schedule style_dim differs from the generator's");
  const auto n = styles.size(0);
  auto x = const_input_.expand({n, -1, -1, -1});
  const auto upsample = F::InterpolateFuncOptions().scale_factor(std::vector<double>{2.0, 2.0}).mode(torch::kNearest);
  const std::size_t resolution_blocks = blocks_.size() - 1;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (i > 0 && i < resolution_blocks) x = F::interpolate(x, upsample);
    x = blocks_[i]->forward(x, styles.select(1, static_cast<std::int64_t>(i)));
  }
  return torch::tanh(to_image_->forward(x));
}

// --- trunk, discriminator, encoder ----------------------------------------------

DownBlockImpl::DownBlockImpl(int in_channels, int out_channels) : in_channels_(in_channels), out_channels_(out_channels) {
  reset();
}

void DownBlockImpl::reset() {
  conv0 = register_module("conv0", EqualizedConv2d(in_channels_, in_channels_, 3));
  conv1 = register_module("conv1", EqualizedConv2d(in_channels_, out_channels_, 3));
}

torch::Tensor DownBlockImpl::forward(const torch::Tensor& x) const {
  auto y = leaky_act(conv0->forward(x));
  y = leaky_act(conv1->forward(y));
  return F::avg_pool2d(y, F::AvgPool2dFuncOptions(2));
}

DownTrunkImpl::DownTrunkImpl(NetworkSpec spec, int stop_resolution)
    : spec_(std::move(spec)), stop_resolution_(stop_resolution) {
  reset();
}

void DownTrunkImpl::reset() {
  blocks_.clear();
  from_image_ = register_module("from_image", EqualizedConv2d(1, spec_.channels_at(spec_.image_size), 1));
  int block = 0;
  for (int r = spec_.image_size; r > stop_resolution_; r /= 2, ++block) {
    blocks_.push_back(register_module("block" + std::to_string(block),
                                      DownBlock(spec_.channels_at(r), spec_.channels_at(r / 2))));
  }
}

std::vector<torch::Tensor> DownTrunkImpl::forward(const torch::Tensor& images) const {
  std::vector<torch::Tensor> outputs;
  auto x = leaky_act(from_image_->forward(images));
  for (const auto& block : blocks_) {
    x = block->forward(x);
    outputs.push_back(x);
  }
  return outputs;
}

DiscriminatorImpl::DiscriminatorImpl(NetworkSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  reset();
}

void DiscriminatorImpl::reset() {
  const int c4 = spec_.channels_at(4);
  trunk_ = register_module("trunk", DownTrunk(spec_, 4));
  final_conv_ = register_module("final_conv", EqualizedConv2d(c4 + 1, c4, 3));
  fc_ = register_module("fc", EqualizedLinear(c4 * 16, c4));
  out = register_module("out", EqualizedLinear(c4, 1, torch::Tensor(), /*zero_weight=*/true));
}

void DiscriminatorImpl::initialize(at::Generator& gen) { initialize_module(*this, gen); }

int DiscriminatorImpl::block_count() const { return trunk_->block_count() + 1; }

DiscriminatorOutput DiscriminatorImpl::forward(const torch::Tensor& images) const {
  const auto batch = as_batch(images);
  check_image_batch(batch, spec_.image_size, "discriminator");
  DiscriminatorOutput result;
  result.features = trunk_->forward(batch);
  auto x = leaky_act(final_conv_->forward(minibatch_stddev(result.features.back())));
  result.features.push_back(x);
  x = leaky_act(fc_->forward(x.flatten(1)));
  result.features.push_back(x);
  result.scores = out->forward(x).squeeze(1);
  return result;
}

EncoderImpl::EncoderImpl(NetworkSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  reset();
}

void EncoderImpl::reset() {
  trunk_ = register_module("trunk", DownTrunk(spec_, 8));
  fc_ = register_module("fc", EqualizedLinear(spec_.channels_at(8), spec_.style_dim));
}

void EncoderImpl::initialize(at::Generator& gen) { initialize_module(*this, gen); }

torch::Tensor EncoderImpl::forward(const torch::Tensor& images) const {
  const auto batch = as_batch(images);
  check_image_batch(batch, spec_.image_size, "encoder");
  const auto features = trunk_->forward(batch).back();  // N x C8 x 8 x 8
  return fc_->forward(features.mean({2, 3}));
}

// --- checksums ---------------------------------------------------------------------

std::uint64_t parameter_checksum(const torch::nn::Module& module) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : module.named_parameters(/*recurse=*/true)) {
    for (unsigned char c : p.key()) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    const auto t = p.value().detach().contiguous().cpu();
    const auto* bytes = static_cast<const unsigned char*>(t.data_ptr());
    const auto n = static_cast<std::size_t>(t.numel()) * t.element_size();
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace ffgan
