#include <gtest/gtest.h>

#include "ffgan/checkpoint.hpp"
#include "ffgan/mixer.hpp"
#include "ffgan/png_io.hpp"
#include "test_support.hpp"

using namespace ffgan;
using namespace ffgan::testing;

namespace {

// A few iterations so the EMA copy and the encoder carry non-trivial weights.
const TrainState& shared_state() {
  static const TrainState state = [] {
    TrainConfig c;
    c.network = tiny_spec();
    c.batch_size = 4;
    c.seed = 2;
    c.ema_decay = 0.5;
    TrainState s(c);
    const auto batch = random_images(4, 16, 1);
    for (int i = 0; i < 4; ++i) train_iteration(s, batch);
    return s;
  }();
  return state;
}

GlyphImage random_glyph(std::uint64_t seed, int size = 16) {
  return GlyphImage::from_tensor(random_images(1, size, seed)[0]);
}

GlyphImage gradient_glyph(int size, int phase) {
  std::vector<std::uint8_t> px(static_cast<std::size_t>(size) * size);
  for (int i = 0; i < size * size; ++i) px[i] = static_cast<std::uint8_t>((i * 7 + phase) % 256);
  return GlyphImage::from_gray8(px, size);
}

}  // namespace

TEST(Mixer, SelfMixEqualsReconstructForEveryK) {
  for (bool ema : {true, false}) {
    FontMixer mixer(shared_state(), ema);
    const auto x = random_glyph(3);
    const auto ref = mixer.reconstruct(x);
    for (int k = 0; k <= mixer.site_count(); ++k) {
      EXPECT_EQ(mixer.mix_fonts(x, x, k).pixels, ref.pixels) << "k=" << k << " ema=" << ema;
    }
  }
}

TEST(Mixer, BoundaryCollapse) {
  FontMixer mixer(shared_state());
  const int S = mixer.site_count();
  const auto c = random_glyph(4), s = random_glyph(5);
  const auto c2 = random_glyph(6), s2 = random_glyph(7);
  // k = 0: every site takes the style image; content is ignored.
  EXPECT_EQ(mixer.mix_fonts(c, s, 0).pixels, mixer.mix_fonts(c2, s, 0).pixels);
  EXPECT_EQ(mixer.mix_fonts(c, s, 0).pixels, mixer.reconstruct(s).pixels);
  // k = S: every site takes the content image; style is ignored.
  EXPECT_EQ(mixer.mix_fonts(c, s, S).pixels, mixer.mix_fonts(c, s2, S).pixels);
  EXPECT_EQ(mixer.mix_fonts(c, s, S).pixels, mixer.reconstruct(c).pixels);
  // In between both inputs matter.
  const int k = default_inject_index(S);
  EXPECT_NE(mixer.mix_fonts(c, s, k).pixels, mixer.mix_fonts(c2, s, k).pixels);
  EXPECT_NE(mixer.mix_fonts(c, s, k).pixels, mixer.mix_fonts(c, s2, k).pixels);
}

TEST(Mixer, DeterministicAndEncodingIsPerImage) {
  FontMixer a(shared_state()), b(shared_state());
  const auto c = random_glyph(8), s = random_glyph(9);
  EXPECT_EQ(a.mix_fonts(c, s, 2).pixels, b.mix_fonts(c, s, 2).pixels);
  EXPECT_TRUE(bitwise_equal(a.encode(c), a.encode(c)));
  EXPECT_EQ(a.encode(c).sizes(), (std::vector<std::int64_t>{1, 8}));
}

TEST(Mixer, RejectsBadInputs) {
  FontMixer mixer(shared_state());
  const auto x = random_glyph(1);
  EXPECT_EQ(thrown_kind([&] { mixer.mix_fonts(x, x, -1); }), ErrorKind::IndexOutOfRange);
  EXPECT_EQ(thrown_kind([&] { mixer.mix_fonts(x, x, mixer.site_count() + 1); }), ErrorKind::IndexOutOfRange);
  EXPECT_EQ(thrown_kind([&] { mixer.mix_fonts(random_glyph(1, 32), x, 1); }), ErrorKind::ShapeMismatch);
}

TEST(Mixer, DefaultInjectIndex) {
  EXPECT_EQ(default_inject_index(NetworkSpec{}.site_count()), 6);
  EXPECT_EQ(default_inject_index(5), 4);
}

TEST(Mixer, SamplingIsSeededAndInRange) {
  FontMixer mixer(shared_state());
  const auto a = mixer.sample_font(11, 4), b = mixer.sample_font(11, 4), c = mixer.sample_font(12, 4);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].pixels, b[i].pixels);
    EXPECT_NO_THROW(a[i].validate());
  }
  EXPECT_NE(a[0].pixels, c[0].pixels);
  EXPECT_NE(a[0].pixels, a[1].pixels);
  // A longer request extends a shorter one.
  EXPECT_EQ(mixer.sample_font(11, 6)[3].pixels, a[3].pixels);
}

TEST(Mixer, FromCheckpointMatchesLiveState) {
  TempDir dir("mixer");
  save_checkpoint(shared_state(), dir / "c.ffgc");
  const auto from_file = FontMixer::from_checkpoint(dir / "c.ffgc");
  FontMixer live(shared_state());
  const auto x = random_glyph(2);
  EXPECT_EQ(from_file.reconstruct(x).pixels, live.reconstruct(x).pixels);
  EXPECT_NE(FontMixer(shared_state(), false).reconstruct(x).pixels, live.reconstruct(x).pixels);
}

TEST(Grid, LayoutFormula) {
  const GridLayout l{.rows = 3, .cols = 4, .cell = 32, .sep = 2, .header = 20};
  EXPECT_EQ(l.width(), 4 * 32 + 5 * 2);
  EXPECT_EQ(l.height(), 20 + 3 * 32 + 4 * 2);
  const std::vector<std::vector<GlyphImage>> rows(3, std::vector<GlyphImage>(4, gradient_glyph(32, 0)));
  const auto img = compose_grid(rows);
  EXPECT_EQ(img.width, 138);
  EXPECT_EQ(img.height, 3 * 32 + 4 * 2);
}

TEST(Grid, CellsAndSeparatorsLandWhereTheFormulaSays) {
  const auto a = gradient_glyph(16, 0), b = gradient_glyph(16, 99);
  const auto img = compose_grid({{a, b}, {b, a}});
  auto at = [&](int x, int y) { return img.pixels[static_cast<std::size_t>(y) * img.width + x]; };
  EXPECT_EQ(at(0, 0), kGridSeparatorValue);
  EXPECT_EQ(at(2 + 16, 5), kGridSeparatorValue);
  const auto ga = a.to_gray8(), gb = b.to_gray8();
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      ASSERT_EQ(at(2 + x, 2 + y), ga[y * 16 + x]);
      ASSERT_EQ(at(2 + 18 + x, 2 + 18 + y), ga[y * 16 + x]);
      ASSERT_EQ(at(2 + 18 + x, 2 + y), gb[y * 16 + x]);
    }
  }
}

TEST(Grid, RaggedAndEmptyInputs) {
  const auto a = gradient_glyph(16, 0);
  EXPECT_EQ(thrown_kind([&] { compose_grid({}); }), ErrorKind::RaggedRows);
  EXPECT_EQ(thrown_kind([&] { compose_grid({{a, a}, {a}}); }), ErrorKind::RaggedRows);
  EXPECT_EQ(thrown_kind([&] { compose_grid({{a, gradient_glyph(32, 0)}}); }), ErrorKind::RaggedRows);
  EXPECT_EQ(thrown_kind([&] { compose_grid({{a}}, {"x", "y"}); }), ErrorKind::InvalidArgument);
}

TEST(Grid, LabelledGridIsByteDeterministic) {
  if (default_label_font().empty()) GTEST_SKIP() << "no DejaVu Sans installed";
  TempDir dir("grid");
  const auto a = gradient_glyph(32, 0), b = gradient_glyph(32, 50);
  const std::vector<std::vector<GlyphImage>> rows{{a, b, a}, {b, a, b}};
  const std::vector<std::string> labels{"Handwritten", "Printed", "Mixed"};
  render_grid(rows, labels, dir / "g1.png");
  render_grid(rows, labels, dir / "g2.png");
  EXPECT_EQ(read_bytes(dir / "g1.png"), read_bytes(dir / "g2.png"));
  const auto img = read_png_gray8(dir / "g1.png");
  EXPECT_EQ(img.height, kGridHeaderHeight + 2 * 32 + 3 * 2);
  // Some label ink lands in the header band.
  int ink = 0;
  for (int i = 0; i < kGridHeaderHeight * img.width; ++i) ink += img.pixels[i] > 0;
  EXPECT_GT(ink, 0);
}

TEST(Grid, LabelsWithAMissingFontFail) {
  const auto a = gradient_glyph(16, 0);
  EXPECT_EQ(thrown_kind([&] { compose_grid({{a}}, {"x"}, "/nonexistent/font.ttf"); }), ErrorKind::UnreadableFont);
}
