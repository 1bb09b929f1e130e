#include "ffgan/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <torch/torch.h>

#include "ffgan/errors.hpp"

namespace ffgan {

double GlyphImage::ink_fraction() const {
  if (pixels.empty()) return 0.0;
  auto inked = std::count_if(pixels.begin(), pixels.end(), [](float v) { return v > 0.0f; });
  return static_cast<double>(inked) / static_cast<double>(pixels.size());
}

void GlyphImage::validate() const {
  if (size <= 0 || pixels.size() != static_cast<std::size_t>(size) * size) {
    fail(ErrorKind::ShapeMismatch, "glyph image is not square: size " + std::to_string(size) + ", " +
                                       std::to_string(pixels.size()) + " pixels");
  }
  for (float v : pixels) {
    if (!std::isfinite(v) || v < -1.0f || v > 1.0f) {
      fail(ErrorKind::InvalidArgument, "glyph pixel outside [-1, 1]: " + std::to_string(v));
    }
  }
}

GlyphImage GlyphImage::from_gray8(std::span<const std::uint8_t> coverage, int size, std::string font_id,
                                  char32_t codepoint) {
  if (coverage.size() != static_cast<std::size_t>(size) * size) {
    fail(ErrorKind::ShapeMismatch, "coverage buffer does not match size " + std::to_string(size));
  }
  GlyphImage img;
  img.size = size;
  img.font_id = std::move(font_id);
  img.codepoint = codepoint;
  img.pixels.resize(coverage.size());
  std::transform(coverage.begin(), coverage.end(), img.pixels.begin(), gray8_to_unit);
  return img;
}

std::uint8_t unit_to_gray8(float v) {
  float c = std::clamp((v + 1.0f) * 0.5f * 255.0f, 0.0f, 255.0f);
  return static_cast<std::uint8_t>(std::lround(c));
}

std::vector<std::uint8_t> GlyphImage::to_gray8() const {
  std::vector<std::uint8_t> out(pixels.size());
  std::transform(pixels.begin(), pixels.end(), out.begin(), unit_to_gray8);
  return out;
}

torch::Tensor GlyphImage::to_tensor() const {
  return torch::from_blob(const_cast<float*>(pixels.data()), {1, size, size}, torch::kFloat32).clone();
}

GlyphImage GlyphImage::from_tensor(const torch::Tensor& image, std::string font_id, char32_t codepoint) {
  auto t = image.detach().to(torch::kCPU, torch::kFloat32).contiguous();
  if (t.dim() == 4 && t.size(0) == 1) t = t.squeeze(0);
  if (t.dim() == 3 && t.size(0) == 1) t = t.squeeze(0);
  if (t.dim() != 2 || t.size(0) != t.size(1)) {
    fail(ErrorKind::ShapeMismatch, "expected a single-channel square image tensor");
  }
  GlyphImage img;
  img.size = static_cast<int>(t.size(0));
  img.font_id = std::move(font_id);
  img.codepoint = codepoint;
  img.pixels.assign(t.data_ptr<float>(), t.data_ptr<float>() + t.numel());
  return img;
}

torch::Tensor stack_images(std::span<const GlyphImage* const> images) {
  if (images.empty()) fail(ErrorKind::EmptyBatch, "cannot stack zero images");
  const int size = images.front()->size;
  auto out = torch::empty({static_cast<long>(images.size()), 1, size, size}, torch::kFloat32);
  float* dst = out.data_ptr<float>();
  for (const GlyphImage* img : images) {
    if (img->size != size) fail(ErrorKind::ShapeMismatch, "mixed image sizes in one batch");
    dst = std::copy(img->pixels.begin(), img->pixels.end(), dst);
  }
  return out;
}

torch::Tensor stack_images(std::span<const GlyphImage> images) {
  std::vector<const GlyphImage*> ptrs;
  ptrs.reserve(images.size());
  for (const auto& img : images) ptrs.push_back(&img);
  return stack_images(std::span<const GlyphImage* const>(ptrs));
}

std::string format_codepoint(char32_t cp) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "U+%04X", static_cast<unsigned>(cp));
  return buf;
}

char32_t parse_codepoint(const std::string& text) {
  std::string hex = text;
  if (hex.rfind("U+", 0) == 0 || hex.rfind("u+", 0) == 0) hex = hex.substr(2);
  if (hex.empty() || hex.size() > 6) fail(ErrorKind::InvalidArgument, "bad codepoint '" + text + "'");
  std::size_t used = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(hex, &used, 16);
  } catch (const std::exception&) {
    fail(ErrorKind::InvalidArgument, "bad codepoint '" + text + "'");
  }
  if (used != hex.size() || v > 0x10FFFF) fail(ErrorKind::InvalidArgument, "bad codepoint '" + text + "'");
  return static_cast<char32_t>(v);
}

}  // namespace ffgan
