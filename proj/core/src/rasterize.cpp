#include "ffgan/rasterize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "ffgan/errors.hpp"
#include "ffgan/glyph_data.hpp"

#define STB_TRUETYPE_IMPLEMENTATION
#define STBTT_STATIC
#pragma GCC diagnostic push
#pragma GCC diagnostic ignored "-Wunused-function"
#include "stb_truetype.h"
#pragma GCC diagnostic pop

namespace ffgan {

struct FontFile::Impl {
  std::vector<unsigned char> bytes;
  stbtt_fontinfo info{};
};

FontFile::FontFile(std::filesystem::path path, std::unique_ptr<Impl> impl)
    : path_(std::move(path)), impl_(std::move(impl)) {}
FontFile::FontFile(FontFile&&) noexcept = default;
FontFile& FontFile::operator=(FontFile&&) noexcept = default;
FontFile::~FontFile() = default;

FontFile FontFile::open(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::UnreadableFont, "cannot open font file '" + path.string() + "'");
  auto impl = std::make_unique<Impl>();
  impl->bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  if (impl->bytes.size() < 12) fail(ErrorKind::UnreadableFont, "'" + path.string() + "' is too short to be a font");

  const int offset = stbtt_GetFontOffsetForIndex(impl->bytes.data(), 0);
  if (offset < 0 || !stbtt_InitFont(&impl->info, impl->bytes.data(), offset)) {
    fail(ErrorKind::UnreadableFont, "'" + path.string() + "' is not a TrueType/OpenType font");
  }
  return FontFile(path, std::move(impl));
}

bool FontFile::has_glyph(char32_t codepoint) const {
  return stbtt_FindGlyphIndex(&impl_->info, static_cast<int>(codepoint)) != 0;
}

GlyphImage FontFile::rasterize(char32_t codepoint, int size, std::string font_id) const {
  if (size < 16) fail(ErrorKind::InvalidArgument, "glyph size must be >= 16, got " + std::to_string(size));
  const auto* info = &impl_->info;
  const int glyph = stbtt_FindGlyphIndex(info, static_cast<int>(codepoint));
  const std::string where = format_codepoint(codepoint) + " in '" + path_.string() + "'";
  if (glyph == 0) fail(ErrorKind::MissingGlyph, "no glyph for " + where);

  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  if (stbtt_IsGlyphEmpty(info, glyph) || !stbtt_GetGlyphBox(info, glyph, &x0, &y0, &x1, &y1) || x1 <= x0 ||
      y1 <= y0) {
    fail(ErrorKind::EmptyGlyph, "no outline for " + where);
  }

  // Font units are y-up; the canvas is y-down.
  const double scale = kGlyphFillRatio * size / std::max(x1 - x0, y1 - y0);
  const double left = x0 * scale, right = x1 * scale;
  const double top = -y1 * scale, bottom = -y0 * scale;
  const double tx = size / 2.0 - (left + right) / 2.0;
  const double ty = size / 2.0 - (top + bottom) / 2.0;
  const double fx = std::floor(tx), fy = std::floor(ty);
  const float shift_x = static_cast<float>(tx - fx), shift_y = static_cast<float>(ty - fy);

  int bx0 = 0, by0 = 0, bx1 = 0, by1 = 0;
  stbtt_GetGlyphBitmapBoxSubpixel(info, glyph, static_cast<float>(scale), static_cast<float>(scale), shift_x,
                                  shift_y, &bx0, &by0, &bx1, &by1);
  const int bw = bx1 - bx0, bh = by1 - by0;
  std::vector<std::uint8_t> canvas(static_cast<std::size_t>(size) * size, 0);
  if (bw > 0 && bh > 0) {
    std::vector<unsigned char> glyph_bitmap(static_cast<std::size_t>(bw) * bh, 0);
    stbtt_MakeGlyphBitmapSubpixel(info, glyph_bitmap.data(), bw, bh, bw, static_cast<float>(scale),
                                  static_cast<float>(scale), shift_x, shift_y, glyph);
    const int ox = bx0 + static_cast<int>(fx), oy = by0 + static_cast<int>(fy);
    for (int r = 0; r < bh; ++r) {
      const int cr = oy + r;
      if (cr < 0 || cr >= size) continue;
      for (int c = 0; c < bw; ++c) {
        const int cc = ox + c;
        if (cc < 0 || cc >= size) continue;
        canvas[static_cast<std::size_t>(cr) * size + cc] = glyph_bitmap[static_cast<std::size_t>(r) * bw + c];
      }
    }
  }

  GlyphImage img = GlyphImage::from_gray8(canvas, size, std::move(font_id), codepoint);
  const double ink = img.ink_fraction();
  if (ink <= kEmptyInkFraction) fail(ErrorKind::EmptyGlyph, "rendered no ink for " + where);
  if (ink >= 1.0) fail(ErrorKind::EmptyGlyph, "rendered a fully inked raster for " + where);
  return img;
}

Gray8Image FontFile::render_text(const std::string& utf8, int pixel_height) const {
  if (pixel_height < 1) fail(ErrorKind::InvalidArgument, "text height must be positive");
  const stbtt_fontinfo* info = &impl_->info;
  const float scale = stbtt_ScaleForPixelHeight(info, static_cast<float>(pixel_height));
  int ascent = 0, descent = 0, gap = 0;
  stbtt_GetFontVMetrics(info, &ascent, &descent, &gap);
  const int baseline = static_cast<int>(std::lround(ascent * scale));

  std::vector<int> glyphs;
  for (char32_t cp : decode_utf8(utf8)) {
    const int g = stbtt_FindGlyphIndex(info, static_cast<int>(cp));
    if (g != 0) glyphs.push_back(g);
  }
  std::vector<float> pen(glyphs.size());
  float x = 0.0f;
  for (std::size_t i = 0; i < glyphs.size(); ++i) {
    pen[i] = x;
    int advance = 0, bearing = 0;
    stbtt_GetGlyphHMetrics(info, glyphs[i], &advance, &bearing);
    x += advance * scale;
    if (i + 1 < glyphs.size()) x += stbtt_GetGlyphKernAdvance(info, glyphs[i], glyphs[i + 1]) * scale;
  }

  Gray8Image out;
  out.width = std::max(1, static_cast<int>(std::ceil(x)));
  out.height = pixel_height;
  out.pixels.assign(static_cast<std::size_t>(out.width) * out.height, 0);
  for (std::size_t i = 0; i < glyphs.size(); ++i) {
    const int origin = static_cast<int>(std::floor(pen[i]));
    const float shift = pen[i] - static_cast<float>(origin);
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    stbtt_GetGlyphBitmapBoxSubpixel(info, glyphs[i], scale, scale, shift, 0.0f, &x0, &y0, &x1, &y1);
    const int w = x1 - x0, h = y1 - y0;
    if (w <= 0 || h <= 0) continue;
    std::vector<unsigned char> bitmap(static_cast<std::size_t>(w) * h);
    stbtt_MakeGlyphBitmapSubpixel(info, bitmap.data(), w, h, w, scale, scale, shift, 0.0f, glyphs[i]);
    for (int r = 0; r < h; ++r) {
      const int row = baseline + y0 + r;
      if (row < 0 || row >= out.height) continue;
      for (int c = 0; c < w; ++c) {
        const int col = origin + x0 + c;
        if (col < 0 || col >= out.width) continue;
        auto& dst = out.pixels[static_cast<std::size_t>(row) * out.width + col];
        dst = std::max(dst, bitmap[static_cast<std::size_t>(r) * w + c]);
      }
    }
  }
  return out;
}

GlyphImage rasterize_glyph(const std::filesystem::path& font_file, char32_t codepoint, int size) {
  return FontFile::open(font_file).rasterize(codepoint, size, font_file.stem().string());
}

}  // namespace ffgan
