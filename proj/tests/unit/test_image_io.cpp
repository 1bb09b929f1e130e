#include <cmath>
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "ffgan/errors.hpp"
#include "ffgan/image.hpp"
#include "ffgan/png_io.hpp"
#include "ffgan/rng.hpp"
#include "test_support.hpp"

using namespace ffgan;
using ffgan::testing::TempDir;

TEST(Errors, KindIsCarriedAndNamed) {
  try {
    fail(ErrorKind::MissingGlyph, "no outline");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingGlyph);
    EXPECT_NE(std::string(e.what()).find("MissingGlyph"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("no outline"), std::string::npos);
  }
}

TEST(Rng, ForkSeedIsStableAndLabelSensitive) {
  EXPECT_EQ(fork_seed(1, "a", 0), fork_seed(1, "a", 0));
  std::set<std::uint64_t> seen;
  for (std::uint64_t root : {0u, 1u, 2u}) {
    for (const char* label : {"a", "b", "init.g"}) {
      for (std::uint64_t i = 0; i < 4; ++i) seen.insert(fork_seed(root, label, i));
    }
  }
  EXPECT_EQ(seen.size(), 3u * 3u * 4u);
}

TEST(Rng, TorchGeneratorReproduces) {
  auto g1 = torch_generator(42), g2 = torch_generator(42);
  EXPECT_TRUE(torch::equal(torch::randn({5}, g1), torch::randn({5}, g2)));
}

TEST(GlyphImage, Gray8MappingIsLinearWithInkPositive) {
  EXPECT_FLOAT_EQ(gray8_to_unit(0), -1.0f);
  EXPECT_FLOAT_EQ(gray8_to_unit(255), 1.0f);
  for (int v = 0; v < 256; ++v) EXPECT_EQ(unit_to_gray8(gray8_to_unit(static_cast<std::uint8_t>(v))), v);
  EXPECT_EQ(unit_to_gray8(-3.0f), 0);
  EXPECT_EQ(unit_to_gray8(3.0f), 255);
}

TEST(GlyphImage, InkFractionCountsPixelsAboveZero) {
  std::vector<std::uint8_t> cov(16 * 16, 0);
  for (int i = 0; i < 64; ++i) cov[i] = 255;
  cov[100] = 127;  // maps just below zero
  const auto img = GlyphImage::from_gray8(cov, 16);
  EXPECT_DOUBLE_EQ(img.ink_fraction(), 64.0 / 256.0);
}

TEST(GlyphImage, ValidateRejectsBadShapesAndValues) {
  GlyphImage img;
  img.size = 4;
  img.pixels.assign(15, 0.0f);
  EXPECT_THROW(img.validate(), Error);
  img.pixels.assign(16, 0.0f);
  EXPECT_NO_THROW(img.validate());
  img.pixels[3] = 1.5f;
  EXPECT_THROW(img.validate(), Error);
  img.pixels[3] = std::nanf("");
  EXPECT_THROW(img.validate(), Error);
}

TEST(GlyphImage, TensorRoundTrip) {
  std::vector<std::uint8_t> cov(16 * 16);
  for (std::size_t i = 0; i < cov.size(); ++i) cov[i] = static_cast<std::uint8_t>(i);
  const auto img = GlyphImage::from_gray8(cov, 16, "f", 0x41);
  const auto t = img.to_tensor();
  ASSERT_EQ(t.sizes(), (std::vector<std::int64_t>{1, 16, 16}));
  const auto back = GlyphImage::from_tensor(t, "f", 0x41);
  EXPECT_EQ(back.pixels, img.pixels);
  std::vector<GlyphImage> two{img, img};
  EXPECT_EQ(stack_images(std::span<const GlyphImage>(two)).sizes(), (std::vector<std::int64_t>{2, 1, 16, 16}));
}

TEST(GlyphImage, CodepointFormatting) {
  EXPECT_EQ(format_codepoint(0xAC00), "U+AC00");
  EXPECT_EQ(format_codepoint(0x41), "U+0041");
  EXPECT_EQ(parse_codepoint("U+AC00"), char32_t{0xAC00});
  EXPECT_EQ(parse_codepoint("AC00"), char32_t{0xAC00});
  EXPECT_THROW(parse_codepoint("U+ZZ"), Error);
  EXPECT_THROW(parse_codepoint("U+110000"), Error);
}

TEST(Png, RoundTripAndDeterministicBytes) {
  TempDir dir("png");
  Gray8Image img{7, 5, {}};
  for (int i = 0; i < 35; ++i) img.pixels.push_back(static_cast<std::uint8_t>(i * 7));
  write_png_gray8(dir / "a.png", img);
  write_png_gray8(dir / "b.png", img);
  EXPECT_EQ(ffgan::testing::read_bytes(dir / "a.png"), ffgan::testing::read_bytes(dir / "b.png"));
  const auto back = read_png_gray8(dir / "a.png");
  EXPECT_EQ(back.width, 7);
  EXPECT_EQ(back.height, 5);
  EXPECT_EQ(back.pixels, img.pixels);
}

TEST(Png, MissingAndGarbageFilesFail) {
  TempDir dir("png_bad");
  try {
    read_png_gray8(dir / "none.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
  }
  {
    std::ofstream(dir / "junk.png") << "not a png";
  }
  EXPECT_THROW(read_png_gray8(dir / "junk.png"), Error);
}
