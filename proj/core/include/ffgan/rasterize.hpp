#pragma once

#include <filesystem>
#include <memory>
#include <vector>

#include "ffgan/image.hpp"
#include "ffgan/png_io.hpp"

namespace ffgan {

/// Fraction of a glyph raster's ink at or below which it counts as empty.
inline constexpr double kEmptyInkFraction = 1e-4;

/// Margin convention: the glyph's outline bounding box is scaled to fill 90%
/// of the canvas along its longer side and its centre is put on the canvas
/// centre.
inline constexpr double kGlyphFillRatio = 0.9;

/// A parsed TrueType/OpenType font held in memory. Immutable after open(),
/// so one instance may be shared by concurrent rasterization workers.
class FontFile {
 public:
  static FontFile open(const std::filesystem::path& path);

  FontFile(FontFile&&) noexcept;
  FontFile& operator=(FontFile&&) noexcept;
  ~FontFile();

  const std::filesystem::path& path() const { return path_; }
  bool has_glyph(char32_t codepoint) const;

  /// Throws MissingGlyph when the character map has no entry, EmptyGlyph
  /// when the rendered ink fraction is <= kEmptyInkFraction or every pixel
  /// is inked.
  GlyphImage rasterize(char32_t codepoint, int size, std::string font_id = {}) const;

  /// A line of UTF-8 text at the given pixel height, set on its baseline with
  /// kerning. Coverage 255 is ink. Characters the font lacks are skipped.
  Gray8Image render_text(const std::string& utf8, int pixel_height) const;

 private:
  struct Impl;
  FontFile(std::filesystem::path path, std::unique_ptr<Impl> impl);

  std::filesystem::path path_;
  std::unique_ptr<Impl> impl_;
};

GlyphImage rasterize_glyph(const std::filesystem::path& font_file, char32_t codepoint, int size);

}  // namespace ffgan
