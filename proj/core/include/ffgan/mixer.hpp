#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "ffgan/image.hpp"
#include "ffgan/networks.hpp"
#include "ffgan/png_io.hpp"
#include "ffgan/trainer.hpp"

namespace ffgan {

/// Last site from the style image, every earlier site from the content image.
/// For the full 128 px model (7 sites) this is 6.
inline int default_inject_index(int sites) { return sites - 1; }

/// Frozen encoder and generator for inference. Holds private copies of the
/// networks, so it is unaffected by later training and safe to share between
/// threads.
class FontMixer {
 public:
  explicit FontMixer(const TrainState& state, bool use_ema = true);
  static FontMixer from_checkpoint(const std::filesystem::path& path, bool use_ema = true);

  int site_count() const { return spec_.site_count(); }
  int image_size() const { return spec_.image_size; }
  const NetworkSpec& spec() const { return spec_; }

  /// Style vector of one image (1 x style_dim). Images are always encoded
  /// one at a time so the result does not depend on what else is in flight.
  torch::Tensor encode(const GlyphImage& image) const;

  /// Sites 0..k-1 driven by E(content), sites k..S-1 by E(style).
  /// Throws ShapeMismatch on a wrong image size, IndexOutOfRange unless 0 <= k <= S.
  GlyphImage mix_fonts(const GlyphImage& content, const GlyphImage& style, int k) const;
  GlyphImage reconstruct(const GlyphImage& image) const;
  /// n glyphs, the i-th from z ~ N(0, I) forked from (seed, i) at every site.
  std::vector<GlyphImage> sample_font(std::uint64_t seed, int n) const;

 private:
  void check_image(const GlyphImage& image, const char* role) const;
  GlyphImage generate(const StyleSchedule& schedule) const;

  NetworkSpec spec_;
  Generator g_{nullptr};
  Encoder e_{nullptr};
};

/// Figure layout. With sep = 2 and header = label band height (0 when there
/// are no labels):
///   width  = cols * cell + (cols + 1) * sep
///   height = header + rows * cell + (rows + 1) * sep
/// Cell (r, c) has its top-left corner at
///   (sep + c * (cell + sep), header + sep + r * (cell + sep)).
struct GridLayout {
  int rows = 0;
  int cols = 0;
  int cell = 0;
  int sep = 2;
  int header = 0;

  int width() const { return cols * cell + (cols + 1) * sep; }
  int height() const { return header + rows * cell + (rows + 1) * sep; }
};

inline constexpr int kGridSeparator = 2;
inline constexpr int kGridHeaderHeight = 20;
inline constexpr std::uint8_t kGridSeparatorValue = 128;

/// Common locations of DejaVu Sans; empty when none exists.
std::filesystem::path default_label_font();

/// Tiles rows of equally sized glyphs. Labels, if any, are centred above their
/// columns and need a font (default_label_font() when label_font is empty).
/// Throws RaggedRows for no rows, an empty row, rows of unequal length, or
/// mixed cell sizes; Io when labels are requested but no font is available,
/// UnreadableFont when the given one cannot be read.
Gray8Image compose_grid(const std::vector<std::vector<GlyphImage>>& rows, const std::vector<std::string>& labels = {},
                        const std::filesystem::path& label_font = {});
void render_grid(const std::vector<std::vector<GlyphImage>>& rows, const std::vector<std::string>& labels,
                 const std::filesystem::path& path, const std::filesystem::path& label_font = {});

}  // namespace ffgan
