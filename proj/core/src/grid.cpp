#include <algorithm>
#include <array>

#include "ffgan/errors.hpp"
#include "ffgan/mixer.hpp"
#include "ffgan/rasterize.hpp"

namespace ffgan {
namespace fs = std::filesystem;

fs::path default_label_font() {
  static const std::array<const char*, 4> candidates = {
      "/usr/share/fonts/truetype/dejavu/DejaVuSans.ttf",
      "/usr/share/fonts/TTF/DejaVuSans.ttf",
      "/usr/share/fonts/dejavu/DejaVuSans.ttf",
      "/Library/Fonts/DejaVuSans.ttf",
  };
  for (const char* c : candidates) {
    std::error_code ec;
    if (fs::is_regular_file(c, ec)) return c;
  }
  return {};
}

Gray8Image compose_grid(const std::vector<std::vector<GlyphImage>>& rows, const std::vector<std::string>& labels,
                        const fs::path& label_font) {
  if (rows.empty()) fail(ErrorKind::RaggedRows, "grid has no rows");
  GridLayout layout;
  layout.rows = static_cast<int>(rows.size());
  layout.cols = static_cast<int>(rows.front().size());
  if (layout.cols == 0) fail(ErrorKind::RaggedRows, "grid row 0 is empty");
  layout.cell = rows.front().front().size;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (static_cast<int>(rows[r].size()) != layout.cols) {
      fail(ErrorKind::RaggedRows, "grid row " + std::to_string(r) + " has " + std::to_string(rows[r].size()) +
                                      " cells, row 0 has " + std::to_string(layout.cols));
    }
    for (const auto& img : rows[r]) {
      img.validate();
      if (img.size != layout.cell) fail(ErrorKind::RaggedRows, "grid cells differ in size");
    }
  }
  const bool has_labels = std::any_of(labels.begin(), labels.end(), [](const auto& l) { return !l.empty(); });
  if (has_labels && static_cast<int>(labels.size()) > layout.cols) {
    fail(ErrorKind::InvalidArgument, "more labels than grid columns");
  }
  layout.header = has_labels ? kGridHeaderHeight : 0;

  Gray8Image canvas;
  canvas.width = layout.width();
  canvas.height = layout.height();
  canvas.pixels.assign(static_cast<std::size_t>(canvas.width) * canvas.height, kGridSeparatorValue);
  std::fill(canvas.pixels.begin(), canvas.pixels.begin() + static_cast<std::ptrdiff_t>(layout.header) * canvas.width, 0);

  for (int r = 0; r < layout.rows; ++r) {
    for (int c = 0; c < layout.cols; ++c) {
      const auto gray = rows[r][c].to_gray8();
      const int top = layout.header + layout.sep + r * (layout.cell + layout.sep);
      const int left = layout.sep + c * (layout.cell + layout.sep);
      for (int y = 0; y < layout.cell; ++y) {
        std::copy_n(gray.begin() + static_cast<std::ptrdiff_t>(y) * layout.cell, layout.cell,
                    canvas.pixels.begin() + static_cast<std::ptrdiff_t>(top + y) * canvas.width + left);
      }
    }
  }

  if (has_labels) {
    const fs::path font_path = label_font.empty() ? default_label_font() : label_font;
    if (font_path.empty()) fail(ErrorKind::Io, "grid labels need a font and no DejaVu Sans was found");
    const FontFile font = FontFile::open(font_path);
    for (std::size_t c = 0; c < labels.size(); ++c) {
      if (labels[c].empty()) continue;
      const Gray8Image text = font.render_text(labels[c], kGridHeaderHeight - 6);
      const int column_left = layout.sep + static_cast<int>(c) * (layout.cell + layout.sep);
      const int left = column_left + (layout.cell - text.width) / 2;
      const int top = (layout.header - text.height) / 2;
      for (int y = 0; y < text.height; ++y) {
        for (int x = 0; x < text.width; ++x) {
          const int cx = left + x;
          if (cx < column_left || cx >= column_left + layout.cell) continue;  // clip to the column
          canvas.pixels[static_cast<std::size_t>(top + y) * canvas.width + cx] =
              text.pixels[static_cast<std::size_t>(y) * text.width + x];
        }
      }
    }
  }
  return canvas;
}

void render_grid(const std::vector<std::vector<GlyphImage>>& rows, const std::vector<std::string>& labels,
                 const fs::path& path, const fs::path& label_font) {
  write_png_gray8(path, compose_grid(rows, labels, label_font));
}

}  // namespace ffgan
