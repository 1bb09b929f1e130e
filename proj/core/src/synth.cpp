#include "ffgan/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>

#include "ffgan/errors.hpp"
#include "ffgan/rng.hpp"

namespace ffgan {
namespace {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

using Stroke = std::vector<Point>;
using Skeleton = std::vector<Stroke>;

// Synthetic characters occupy the private use area.
constexpr char32_t kSynthCodepointBase = 0xE000;

Skeleton make_skeleton(std::uint64_t seed, int char_index) {
  std::mt19937_64 rng(fork_seed(seed, "synth.char", static_cast<std::uint64_t>(char_index)));
  std::uniform_real_distribution<double> coord(0.18, 0.82);
  std::uniform_int_distribution<int> n_strokes(2, 4);
  std::uniform_int_distribution<int> n_points(2, 3);
  Skeleton skeleton;
  const int strokes = n_strokes(rng);
  for (int s = 0; s < strokes; ++s) {
    Stroke stroke;
    const int points = n_points(rng);
    for (int p = 0; p < points; ++p) stroke.push_back({coord(rng), coord(rng)});
    skeleton.push_back(std::move(stroke));
  }
  return skeleton;
}

// Distance from q to segment ab, blending a round cap (Euclidean) with a
// square cap (Chebyshev in the segment frame) by `rounding`.
double segment_distance(Point q, Point a, Point b, double rounding) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len = std::hypot(dx, dy);
  if (len < 1e-12) return std::hypot(q.x - a.x, q.y - a.y);
  const double ux = dx / len, uy = dy / len;
  const double along = (q.x - a.x) * ux + (q.y - a.y) * uy;
  const double perp = std::abs(-(q.x - a.x) * uy + (q.y - a.y) * ux);
  const double beyond = along < 0.0 ? -along : (along > len ? along - len : 0.0);
  const double round_d = std::hypot(beyond, perp);
  const double square_d = std::max(beyond, perp);
  return rounding * round_d + (1.0 - rounding) * square_d;
}

}  // namespace

SynthFontStyle synth_font_style(std::uint64_t seed, int font_index, bool handwritten) {
  std::mt19937_64 rng(fork_seed(seed, "synth.font", static_cast<std::uint64_t>(font_index)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SynthFontStyle style;
  style.stroke_width = 0.06 + 0.07 * unit(rng);
  style.slant = -0.2 + 0.4 * unit(rng);
  const double jitter_draw = unit(rng);
  const double rounding_draw = unit(rng);
  style.jitter = handwritten ? 0.02 + 0.025 * jitter_draw : 0.0;
  style.rounding = handwritten ? 0.6 + 0.4 * rounding_draw : 0.5 * rounding_draw;
  return style;
}

FontDataset synth_glyph_dataset(const SynthRequest& request) {
  if (request.n_fonts < 1) fail(ErrorKind::InvalidArgument, "n_fonts must be >= 1");
  if (request.n_chars < 1) fail(ErrorKind::InvalidArgument, "n_chars must be >= 1");
  if (request.image_size < 16) fail(ErrorKind::InvalidArgument, "image size must be >= 16");

  FontDataset ds;
  ds.image_size = request.image_size;
  const int n_handwritten = (request.n_fonts + 1) / 2;
  std::vector<SynthFontStyle> styles;
  for (int f = 0; f < request.n_fonts; ++f) {
    char id[32];
    std::snprintf(id, sizeof id, "synth%02d", f);
    const bool handwritten = f < n_handwritten;
    ds.records.push_back({id, std::string("Synthetic ") + id,
                          handwritten ? FontCategory::Handwritten : FontCategory::Printed, "synthetic"});
    styles.push_back(synth_font_style(request.seed, f, handwritten));
  }
  std::vector<Skeleton> skeletons;
  for (int c = 0; c < request.n_chars; ++c) {
    ds.charset.push_back(kSynthCodepointBase + static_cast<char32_t>(c));
    skeletons.push_back(make_skeleton(request.seed, c));
  }
  SplitRequest split = request.split;
  split.seed = fork_seed(request.seed, "synth.split");
  ds.split = draw_split(ds.records, ds.charset, split);

  const int size = request.image_size;
  std::vector<std::uint8_t> coverage(static_cast<std::size_t>(size) * size);
  for (int f = 0; f < request.n_fonts; ++f) {
    const SynthFontStyle& style = styles[f];
    for (int c = 0; c < request.n_chars; ++c) {
      std::mt19937_64 rng(fork_seed(request.seed, "synth.jitter",
                                    static_cast<std::uint64_t>(f) * request.n_chars + c));
      std::normal_distribution<double> jitter(0.0, 1.0);
      Skeleton strokes = skeletons[c];
      for (auto& stroke : strokes) {
        for (auto& p : stroke) {
          if (style.jitter > 0.0) {
            p.x += style.jitter * jitter(rng);
            p.y += style.jitter * jitter(rng);
          }
          // y grows downward; shear about the vertical centre.
          p.x += style.slant * (0.5 - p.y);
        }
      }
      const double half_width = style.stroke_width / 2.0;
      for (int r = 0; r < size; ++r) {
        for (int col = 0; col < size; ++col) {
          const Point q{(col + 0.5) / size, (r + 0.5) / size};
          double d = 1e9;
          for (const auto& stroke : strokes) {
            for (std::size_t i = 0; i + 1 < stroke.size(); ++i) {
              d = std::min(d, segment_distance(q, stroke[i], stroke[i + 1], style.rounding));
            }
          }
          // One-pixel linear ramp at the stroke edge.
          const double cov = std::clamp(0.5 - (d - half_width) * size, 0.0, 1.0);
          coverage[static_cast<std::size_t>(r) * size + col] = static_cast<std::uint8_t>(std::lround(cov * 255.0));
        }
      }
      GlyphImage img = GlyphImage::from_gray8(coverage, size, ds.records[f].font_id, ds.charset[c]);
      const double ink = img.ink_fraction();
      if (ink <= 0.0 || ink >= 1.0) {
        ds.skipped.push_back({ds.records[f].font_id, ds.charset[c], "EmptyGlyph"});
        continue;
      }
      ds.images.emplace(FontDataset::Key{ds.records[f].font_id, ds.charset[c]}, std::move(img));
    }
  }
  ds.validate();
  return ds;
}

}  // namespace ffgan
