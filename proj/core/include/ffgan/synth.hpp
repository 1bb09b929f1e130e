#pragma once

#include <cstdint>

#include "ffgan/glyph_data.hpp"

namespace ffgan {

struct SynthRequest {
  std::uint64_t seed = 0;
  int n_fonts = 4;
  int n_chars = 16;
  int image_size = 32;
  /// Defaults keep every font and character in the training partition.
  SplitRequest split{.font_holdout = 0.0, .train_chars = {}, .test_chars = {}, .char_train_fraction = 1.0};
};

/// Style parameters of one synthetic "font".
struct SynthFontStyle {
  double stroke_width = 0.1;  // fraction of the canvas side
  double slant = 0.0;         // horizontal shear per unit height
  double jitter = 0.0;        // std-dev of skeleton point displacement; 0 for printed
  double rounding = 0.0;      // 0 square stroke ends, 1 round
};

/// A procedural corpus: every character is a random stroke skeleton shared by
/// all fonts, every font is a SynthFontStyle, and a glyph is the skeleton
/// drawn with the style. Content and style are therefore independent by
/// construction. The first ceil(n/2) fonts are handwritten (jittered), the
/// rest printed. Pure function of the request.
FontDataset synth_glyph_dataset(const SynthRequest& request);

SynthFontStyle synth_font_style(std::uint64_t seed, int font_index, bool handwritten);

}  // namespace ffgan
