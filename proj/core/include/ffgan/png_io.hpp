#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace ffgan {

struct Gray8Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major
};

/// Writes an 8-bit grayscale PNG without alpha. Output bytes depend only on
/// the pixels (no timestamps or text chunks), so equal inputs give equal files.
void write_png_gray8(const std::filesystem::path& path, const Gray8Image& image);
std::vector<std::uint8_t> encode_png_gray8(const Gray8Image& image);

/// Reads any PNG and converts it to 8-bit grayscale (alpha is dropped).
Gray8Image read_png_gray8(const std::filesystem::path& path);

}  // namespace ffgan
