#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <torch/types.h>

namespace ffgan {

/// One character rendered in one font: a square single-channel raster with
/// values in [-1, +1], -1 background and +1 full ink.
struct GlyphImage {
  int size = 0;
  std::vector<float> pixels;  // row-major, size * size
  std::string font_id;
  char32_t codepoint = 0;

  float at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * size + col]; }

  /// Share of pixels strictly above 0, i.e. more ink than background.
  double ink_fraction() const;

  /// Throws ShapeMismatch / InvalidArgument unless size, pixel count and
  /// value range are consistent.
  void validate() const;

  /// Builds an image from 8-bit coverage (0 background, 255 ink).
  static GlyphImage from_gray8(std::span<const std::uint8_t> coverage, int size, std::string font_id = {},
                               char32_t codepoint = 0);
  std::vector<std::uint8_t> to_gray8() const;

  /// 1 x size x size float tensor (a view-free copy).
  torch::Tensor to_tensor() const;
  static GlyphImage from_tensor(const torch::Tensor& image, std::string font_id = {}, char32_t codepoint = 0);
};

/// Stacks images into an N x 1 x size x size float tensor.
torch::Tensor stack_images(std::span<const GlyphImage* const> images);
torch::Tensor stack_images(std::span<const GlyphImage> images);

/// Linear 8-bit <-> [-1, +1] mapping shared by every reader and writer.
inline float gray8_to_unit(std::uint8_t v) { return static_cast<float>(v) / 255.0f * 2.0f - 1.0f; }
std::uint8_t unit_to_gray8(float v);

std::string format_codepoint(char32_t cp);  // "U+AC00"
char32_t parse_codepoint(const std::string& text);

}  // namespace ffgan
