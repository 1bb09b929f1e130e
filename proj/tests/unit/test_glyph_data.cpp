#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <gtest/gtest.h>
#include <json.hpp>

#include "ffgan/batch_iterator.hpp"
#include "ffgan/errors.hpp"
#include "ffgan/glyph_data.hpp"
#include "ffgan/rasterize.hpp"
#include "ffgan/synth.hpp"
#include "test_support.hpp"

using namespace ffgan;
using namespace ffgan::testing;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no ffgan::Error thrown";
  return ErrorKind::InvalidArgument;
}

std::vector<FontRecord> numbered_fonts(int n) {
  std::vector<FontRecord> fonts;
  for (int i = 0; i < n; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "font%03d", i);
    fonts.push_back({id, id, i % 2 ? FontCategory::Printed : FontCategory::Handwritten, "synthetic"});
  }
  return fonts;
}

std::vector<char32_t> numbered_chars(int n, char32_t first = 0x4E00) {
  std::vector<char32_t> out;
  for (int i = 0; i < n; ++i) out.push_back(first + static_cast<char32_t>(i));
  return out;
}

template <typename T>
bool disjoint(const std::vector<T>& a, const std::vector<T>& b) {
  const std::set<T> sa(a.begin(), a.end());
  return std::none_of(b.begin(), b.end(), [&](const T& x) { return sa.count(x) > 0; });
}

std::vector<FontRecord> fixture_fonts() {
  return {{"fixhand", "Fixture Hand", FontCategory::Handwritten, handwritten_fixture_font().string()},
          {"fixprint", "Fixture Print", FontCategory::Printed, printed_fixture_font().string()}};
}

}  // namespace

// --- rasterization ----------------------------------------------------------------

TEST(Rasterize, MissingGlyphForAbsentCodepoint) {
  EXPECT_EQ(kind_of([] { rasterize_glyph(printed_fixture_font(), U'Z', 128); }), ErrorKind::MissingGlyph);
}

TEST(Rasterize, SpaceIsEmpty) {
  EXPECT_EQ(kind_of([] { rasterize_glyph(printed_fixture_font(), U' ', 128); }), ErrorKind::EmptyGlyph);
}

TEST(Rasterize, UnreadableFont) {
  TempDir dir("badfont");
  { std::ofstream(dir / "x.ttf") << "definitely not a font"; }
  EXPECT_EQ(kind_of([&] { FontFile::open(dir / "x.ttf"); }), ErrorKind::UnreadableFont);
  EXPECT_EQ(kind_of([&] { FontFile::open(dir / "missing.ttf"); }), ErrorKind::UnreadableFont);
}

TEST(Rasterize, SizeBelowSixteenRejected) {
  EXPECT_EQ(kind_of([] { rasterize_glyph(printed_fixture_font(), U'A', 15); }), ErrorKind::InvalidArgument);
}

// Regression pins measured once from this rasterizer on the shipped fixtures.
// The exact-coverage oracle in tests/fixtures/make_fixture_fonts.py (polygon
// area per pixel, same placement) gives 0.17291259765625 and
// 0.09661865234375; the render may differ from it by at most 2 pixels.
constexpr double kPinnedPrintedInk = 0.17291259765625;
constexpr double kPinnedHandInk = 0.0966796875;

TEST(Rasterize, HangulFixtureInkFractionPinned) {
  const auto printed = rasterize_glyph(printed_fixture_font(), 0xAC00, 128);
  const auto hand = rasterize_glyph(handwritten_fixture_font(), 0xAC00, 128);
  ASSERT_EQ(printed.size, 128);
  ASSERT_EQ(printed.pixels.size(), 128u * 128u);
  EXPECT_NEAR(printed.ink_fraction(), kPinnedPrintedInk, 1e-12);
  EXPECT_NEAR(hand.ink_fraction(), kPinnedHandInk, 1e-12);
  const double two_pixels = 2.0 / (128 * 128);
  EXPECT_NEAR(printed.ink_fraction(), 0.17291259765625, two_pixels);
  EXPECT_NEAR(hand.ink_fraction(), 0.09661865234375, two_pixels);
}

TEST(Rasterize, DeterministicCenteredAndInRange) {
  const auto a = rasterize_glyph(printed_fixture_font(), U'H', 64);
  const auto b = rasterize_glyph(printed_fixture_font(), U'H', 64);
  EXPECT_EQ(a.pixels, b.pixels);
  EXPECT_NO_THROW(a.validate());
  // Ink bounding box fills about 90% of the longer side and is centred.
  int top = 64, bottom = -1, left = 64, right = -1;
  for (int r = 0; r < 64; ++r) {
    for (int c = 0; c < 64; ++c) {
      if (a.at(r, c) > 0) {
        top = std::min(top, r), bottom = std::max(bottom, r);
        left = std::min(left, c), right = std::max(right, c);
      }
    }
  }
  const int extent = std::max(bottom - top + 1, right - left + 1);
  EXPECT_NEAR(extent, 0.9 * 64, 2.0);
  EXPECT_NEAR((top + bottom + 1) / 2.0, 32.0, 1.5);
  EXPECT_NEAR((left + right + 1) / 2.0, 32.0, 1.5);
}

TEST(Rasterize, RenderTextProducesInk) {
  const auto font = FontFile::open(printed_fixture_font());
  const auto text = font.render_text("AB", 14);
  EXPECT_EQ(text.height, 14);
  EXPECT_GT(text.width, 10);
  EXPECT_GT(*std::max_element(text.pixels.begin(), text.pixels.end()), 200);
}

// --- split protocol ---------------------------------------------------------------

TEST(Split, ChineseConfiguration) {
  SplitRequest req;
  req.font_holdout = 0.2;
  req.train_chars = 800;
  req.test_chars = 200;
  req.seed = 7;
  const auto s = draw_split(numbered_fonts(110), numbered_chars(1000), req);
  EXPECT_EQ(s.train_fonts.size(), 88u);
  EXPECT_EQ(s.test_fonts.size(), 22u);
  EXPECT_EQ(s.train_chars.size(), 800u);
  EXPECT_EQ(s.test_chars.size(), 200u);
  EXPECT_TRUE(disjoint(s.train_fonts, s.test_fonts));
  EXPECT_TRUE(disjoint(s.train_chars, s.test_chars));
}

TEST(Split, KoreanExplicitCountWinsOverFraction) {
  SplitRequest req;
  req.train_chars = 2000;
  req.seed = 3;
  const auto s = draw_split(numbered_fonts(174), numbered_chars(2350, 0xAC00), req);
  EXPECT_EQ(s.train_fonts.size(), 139u);
  EXPECT_EQ(s.test_fonts.size(), 35u);
  EXPECT_EQ(s.train_chars.size(), 2000u);
  EXPECT_EQ(s.test_chars.size(), 350u);
}

TEST(Split, DegenerateSingleFont) {
  SplitRequest req;
  req.font_holdout = 0.0;
  req.char_train_fraction = 0.8;
  const auto s = draw_split(numbered_fonts(1), numbered_chars(10), req);
  EXPECT_EQ(s.train_fonts.size(), 1u);
  EXPECT_TRUE(s.test_fonts.empty());
  EXPECT_EQ(s.train_chars.size(), 8u);
  EXPECT_EQ(s.test_chars.size(), 2u);
}

TEST(Split, DisjointForManySeedsAndDeterministic) {
  const auto fonts = numbered_fonts(23);
  const auto chars = numbered_chars(57);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    SplitRequest req;
    req.seed = seed;
    const auto s = draw_split(fonts, chars, req);
    ASSERT_TRUE(disjoint(s.train_fonts, s.test_fonts));
    ASSERT_TRUE(disjoint(s.train_chars, s.test_chars));
    ASSERT_EQ(s.train_fonts.size() + s.test_fonts.size(), fonts.size());
  }
  SplitRequest req;
  req.seed = 11;
  const auto a = draw_split(fonts, chars, req), b = draw_split(fonts, chars, req);
  EXPECT_EQ(a.train_fonts, b.train_fonts);
  EXPECT_EQ(a.train_chars, b.train_chars);
  req.seed = 12;
  const auto c = draw_split(fonts, chars, req);
  EXPECT_TRUE(a.train_fonts != c.train_fonts || a.train_chars != c.train_chars);
}

TEST(Split, InsufficientCountsFail) {
  SplitRequest req;
  req.train_chars = 11;
  EXPECT_EQ(kind_of([&] { draw_split(numbered_fonts(5), numbered_chars(10), req); }), ErrorKind::InsufficientChars);
  req = {};
  req.train_chars = 8;
  req.test_chars = 3;
  EXPECT_EQ(kind_of([&] { draw_split(numbered_fonts(5), numbered_chars(10), req); }), ErrorKind::InsufficientChars);
  req = {};
  req.font_holdout = 0.6;
  EXPECT_EQ(kind_of([&] { draw_split(numbered_fonts(1), numbered_chars(10), req); }), ErrorKind::InsufficientFonts);
  EXPECT_EQ(kind_of([&] { draw_split({}, numbered_chars(10), SplitRequest{}); }), ErrorKind::InsufficientFonts);
}

// --- real-font corpus ---------------------------------------------------------------

TEST(BuildDataset, FixtureCorpusSkipsAndLogsMissingGlyphs) {
  // 'Z' exists in neither fixture, so it is skipped for both fonts.
  std::vector<char32_t> charset = {U'A', U'B', U'C', U'D', U'E', U'Z'};
  SplitRequest req;
  req.font_holdout = 0.0;
  req.char_train_fraction = 1.0;
  BuildOptions opts{.image_size = 32, .workers = 3};
  const auto ds = build_dataset(fixture_fonts(), charset, req, opts);
  EXPECT_EQ(ds.skipped.size(), 2u);
  for (const auto& s : ds.skipped) EXPECT_EQ(s.codepoint, U'Z');
  EXPECT_EQ(ds.images.size(), 10u);
  EXPECT_EQ(ds.partition_keys(Partition::Train).size(), 2u * 6u - ds.skipped.size());
  EXPECT_NO_THROW(ds.validate());

  // Worker count does not change the result.
  const auto serial = build_dataset(fixture_fonts(), charset, req, BuildOptions{.image_size = 32, .workers = 1});
  ASSERT_EQ(serial.images.size(), ds.images.size());
  for (const auto& [key, img] : ds.images) EXPECT_EQ(serial.images.at(key).pixels, img.pixels);
}

TEST(BuildDataset, SaveLoadRoundTripAndChecksums) {
  TempDir dir("corpus");
  SplitRequest req;
  req.font_holdout = 0.5;
  req.char_train_fraction = 0.75;
  req.seed = 5;
  const auto ds = build_dataset(fixture_fonts(), {U'A', U'B', U'C', U'D'}, req, BuildOptions{.image_size = 32});
  ds.save(dir.path());
  EXPECT_TRUE(fs::exists(dir / "images/fixhand/U+0041.png"));
  const auto back = FontDataset::load(dir.path());
  EXPECT_EQ(back.split.train_fonts, ds.split.train_fonts);
  EXPECT_EQ(back.split.test_chars, ds.split.test_chars);
  EXPECT_EQ(back.records.size(), 2u);
  EXPECT_EQ(back.records[0].category, FontCategory::Handwritten);
  ASSERT_EQ(back.images.size(), ds.images.size());
  for (const auto& [key, img] : ds.images) EXPECT_EQ(back.images.at(key).pixels, img.pixels);

  // Test material: held-out chars on train fonts plus every char on held-out fonts.
  const auto test_keys = back.partition_keys(Partition::Test);
  EXPECT_EQ(test_keys.size(), 1u * 1u + 1u * 4u);

  // Same inputs, same manifest bytes.
  TempDir again("corpus2");
  build_dataset(fixture_fonts(), {U'A', U'B', U'C', U'D'}, req, BuildOptions{.image_size = 32}).save(again.path());
  EXPECT_EQ(read_bytes(dir / "manifest.json"), read_bytes(again / "manifest.json"));

  // Tampering with a stored image is detected.
  {
    std::ofstream f(dir / "images/fixhand/U+0041.png", std::ios::binary | std::ios::app);
    f << "x";
  }
  EXPECT_EQ(kind_of([&] { FontDataset::load(dir.path()); }), ErrorKind::Corrupt);
}

TEST(BuildDataset, PartitionImagesNeedNoLabels) {
  TempDir dir("nolabel");
  const auto ds = synth_glyph_dataset(SynthRequest{.seed = 3, .n_fonts = 2, .n_chars = 4});
  ds.save(dir.path());
  const auto images = load_partition_images(dir.path(), Partition::Train);
  ASSERT_EQ(images.size(), 8u);
  const auto keys = ds.partition_keys(Partition::Train);
  for (std::size_t i = 0; i < keys.size(); ++i) {
    EXPECT_EQ(images[i].pixels, ds.find(keys[i].first, keys[i].second)->pixels);
    EXPECT_TRUE(images[i].font_id.empty());
    EXPECT_EQ(images[i].codepoint, 0u);
  }
}

// --- synthetic corpus ----------------------------------------------------------------

TEST(Synth, DeterministicAndSeedSensitive) {
  const SynthRequest r1{.seed = 1, .n_fonts = 4, .n_chars = 16, .image_size = 32};
  const auto a = synth_glyph_dataset(r1), b = synth_glyph_dataset(r1);
  ASSERT_EQ(a.images.size(), 64u);
  for (const auto& [key, img] : a.images) ASSERT_EQ(b.images.at(key).pixels, img.pixels);
  SynthRequest r2 = r1;
  r2.seed = 2;
  const auto c = synth_glyph_dataset(r2);
  bool differs = false;
  for (const auto& [key, img] : a.images) differs |= c.images.at(key).pixels != img.pixels;
  EXPECT_TRUE(differs);
}

TEST(Synth, LabelsAndValidation) {
  const auto ds = synth_glyph_dataset(SynthRequest{.seed = 1, .n_fonts = 5, .n_chars = 3});
  int hand = 0;
  for (const auto& r : ds.records) {
    hand += r.category == FontCategory::Handwritten;
    EXPECT_EQ(r.source, "synthetic");
  }
  EXPECT_EQ(hand, 3);
  EXPECT_NO_THROW(ds.validate());
  EXPECT_EQ(kind_of([] { synth_glyph_dataset(SynthRequest{.n_fonts = 0}); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { synth_glyph_dataset(SynthRequest{.n_chars = 0}); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { synth_glyph_dataset(SynthRequest{.image_size = 8}); }), ErrorKind::InvalidArgument);
}

TEST(Synth, PrintedFontsHaveNoJitter) {
  for (int f = 0; f < 6; ++f) {
    EXPECT_EQ(synth_font_style(9, f, false).jitter, 0.0);
    EXPECT_GT(synth_font_style(9, f, true).jitter, 0.0);
  }
}

// Pinned from the emitted corpus (seed 1, 2 fonts x 4 chars, 32 px).
constexpr double kSynthInkMin = 0.07421875;
constexpr double kSynthInkMax = 0.1337890625;

TEST(Synth, InkFractionIntervalPinned) {
  const auto ds = synth_glyph_dataset(SynthRequest{.seed = 1, .n_fonts = 2, .n_chars = 4, .image_size = 32});
  double lo = 1.0, hi = 0.0;
  for (const auto& [key, img] : ds.images) {
    lo = std::min(lo, img.ink_fraction());
    hi = std::max(hi, img.ink_fraction());
  }
  EXPECT_GT(lo, 0.02);
  EXPECT_LT(hi, 0.6);
  EXPECT_NEAR(lo, kSynthInkMin, 1e-12);
  EXPECT_NEAR(hi, kSynthInkMax, 1e-12);
}

// --- batches -----------------------------------------------------------------------------

namespace {
std::vector<GlyphImage> indexed_images(int n) {
  std::vector<GlyphImage> out;
  for (int i = 0; i < n; ++i) {
    std::vector<std::uint8_t> cov(16 * 16, 0);
    cov[0] = static_cast<std::uint8_t>(i);
    out.push_back(GlyphImage::from_gray8(cov, 16));
  }
  return out;
}
}  // namespace

TEST(Batches, EightByFourCoversEachItemOnce) {
  BatchIterator it(indexed_images(8), BatchOptions{.batch_size = 4, .seed = 1});
  EXPECT_EQ(it.batches_per_epoch(), 2u);
  std::multiset<std::size_t> seen;
  for (int b = 0; b < 2; ++b) {
    const auto batch = it.next();
    EXPECT_EQ(batch->epoch, 0u);
    EXPECT_EQ(batch->pixels.size(0), 4);
    seen.insert(batch->indices.begin(), batch->indices.end());
  }
  EXPECT_EQ(seen, (std::multiset<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7}));
  EXPECT_EQ(it.next()->epoch, 1u);
}

TEST(Batches, ShortFinalBatchKeptOrDropped) {
  BatchIterator keep(indexed_images(8), BatchOptions{.batch_size = 3, .seed = 1, .drop_last = false});
  std::vector<std::int64_t> sizes;
  for (int i = 0; i < 3; ++i) sizes.push_back(keep.next()->pixels.size(0));
  EXPECT_EQ(sizes, (std::vector<std::int64_t>{3, 3, 2}));
  BatchIterator drop(indexed_images(8), BatchOptions{.batch_size = 3, .seed = 1, .drop_last = true});
  EXPECT_EQ(drop.batches_per_epoch(), 2u);
  drop.next();
  drop.next();
  EXPECT_EQ(drop.next()->epoch, 1u);
}

TEST(Batches, SameSeedSameOrderAndSeekMatches) {
  BatchOptions opts{.batch_size = 3, .seed = 9, .prefetch = true};
  BatchIterator a(indexed_images(10), opts), b(indexed_images(10), opts);
  std::vector<std::vector<std::size_t>> order;
  for (int i = 0; i < 9; ++i) {
    const auto x = a.next(), y = b.next();
    EXPECT_EQ(x->indices, y->indices);
    EXPECT_TRUE(torch::equal(x->pixels, y->pixels));
    order.push_back(x->indices);
  }
  BatchIterator c(indexed_images(10), opts);
  c.seek(5);
  for (int i = 5; i < 9; ++i) EXPECT_EQ(c.next()->indices, order[i]);
  BatchIterator other(indexed_images(10), BatchOptions{.batch_size = 3, .seed = 10});
  bool differs = false;
  for (int i = 0; i < 4; ++i) differs |= other.next()->indices != order[i];
  EXPECT_TRUE(differs);
}

TEST(Batches, EmptyPartitionRejected) {
  EXPECT_EQ(kind_of([] { BatchIterator it(std::vector<GlyphImage>{}, BatchOptions{}); }), ErrorKind::EmptyPartition);
  EXPECT_EQ(kind_of([] { BatchIterator it(indexed_images(2), BatchOptions{.batch_size = 4, .drop_last = true}); }),
            ErrorKind::EmptyPartition);
}
