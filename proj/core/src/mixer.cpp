#include "ffgan/mixer.hpp"

#include "ffgan/checkpoint.hpp"
#include "ffgan/errors.hpp"
#include "ffgan/rng.hpp"

namespace ffgan {

FontMixer::FontMixer(const TrainState& state, bool use_ema) : spec_(state.config.network) {
  const Generator& source = use_ema ? state.g_ema : state.g;
  g_ = std::dynamic_pointer_cast<GeneratorImpl>(source->clone());
  e_ = std::dynamic_pointer_cast<EncoderImpl>(state.e->clone());
  for (auto& p : g_->parameters()) p.requires_grad_(false);
  for (auto& p : e_->parameters()) p.requires_grad_(false);
}

FontMixer FontMixer::from_checkpoint(const std::filesystem::path& path, bool use_ema) {
  return FontMixer(load_checkpoint(path), use_ema);
}

void FontMixer::check_image(const GlyphImage& image, const char* role) const {
  image.validate();
  if (image.size != spec_.image_size) {
    fail(ErrorKind::ShapeMismatch, std::string(role) + " image is " + std::to_string(image.size) +
                                       " px but the model expects " + std::to_string(spec_.image_size));
  }
}

torch::Tensor FontMixer::encode(const GlyphImage& image) const {
  check_image(image, "input");
  torch::NoGradGuard guard;
  const auto dtype = e_->parameters().front().scalar_type();
  return e_->forward(image.to_tensor().unsqueeze(0).to(dtype));
}

GlyphImage FontMixer::generate(const StyleSchedule& schedule) const {
  torch::NoGradGuard guard;
  auto y = g_->forward(schedule);
  return GlyphImage::from_tensor(y[0].to(torch::kFloat32));
}

GlyphImage FontMixer::mix_fonts(const GlyphImage& content, const GlyphImage& style, int k) const {
  check_image(content, "content");
  check_image(style, "style");
  if (k < 0 || k > site_count()) {
    fail(ErrorKind::IndexOutOfRange,
         "inject index " + std::to_string(k) + " outside [0, " + std::to_string(site_count()) + "]");
  }
  return generate(make_style_schedule(encode(content), encode(style), k, site_count()));
}

GlyphImage FontMixer::reconstruct(const GlyphImage& image) const {
  const auto w = encode(image);
  return generate(make_style_schedule(w, w, site_count(), site_count()));
}

std::vector<GlyphImage> FontMixer::sample_font(std::uint64_t seed, int n) const {
  if (n < 1) fail(ErrorKind::InvalidArgument, "sample count must be >= 1");
  const auto dtype = g_->parameters().front().scalar_type();
  std::vector<GlyphImage> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto gen = torch_generator(fork_seed(seed, "sample", static_cast<std::uint64_t>(i)));
    auto z = torch::randn({1, spec_.style_dim}, gen, torch::TensorOptions().dtype(dtype));
    out.push_back(generate(uniform_schedule(z, site_count())));
  }
  return out;
}

}  // namespace ffgan
