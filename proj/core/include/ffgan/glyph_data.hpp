#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ffgan/image.hpp"

namespace ffgan {

enum class FontCategory { Handwritten, Printed };

std::string_view to_string(FontCategory category);
FontCategory parse_font_category(std::string_view text);

struct FontRecord {
  std::string font_id;
  std::string name;
  FontCategory category = FontCategory::Printed;
  std::string source;  // font file path, or "synthetic"
};

/// Held-out fonts and held-out characters. Test material is the held-out
/// characters on training fonts plus every used character on held-out fonts.
struct DatasetSplit {
  std::vector<std::string> train_fonts;
  std::vector<std::string> test_fonts;
  std::vector<char32_t> train_chars;
  std::vector<char32_t> test_chars;
  std::uint64_t seed = 0;
};

/// How to draw a split. Explicit character counts win over the fraction;
/// train_fonts = floor((1 - font_holdout) * n_fonts), the rest are held out.
struct SplitRequest {
  double font_holdout = 0.2;
  std::optional<std::size_t> train_chars;  // explicit count
  std::optional<std::size_t> test_chars;   // explicit count; defaults to the remainder
  double char_train_fraction = 0.8;        // used when train_chars is unset
  std::uint64_t seed = 0;
};

DatasetSplit draw_split(const std::vector<FontRecord>& fonts, const std::vector<char32_t>& charset,
                        const SplitRequest& request);

enum class Partition { Train, Test };

struct SkipRecord {
  std::string font_id;
  char32_t codepoint = 0;
  std::string reason;
};

/// A fonts x characters corpus with its split and an in-memory image store
/// keyed by (font_id, codepoint).
class FontDataset {
 public:
  using Key = std::pair<std::string, char32_t>;

  std::vector<FontRecord> records;
  std::vector<char32_t> charset;
  DatasetSplit split;
  int image_size = 0;
  std::vector<SkipRecord> skipped;
  std::map<Key, GlyphImage> images;

  const FontRecord& record(const std::string& font_id) const;
  const GlyphImage* find(const std::string& font_id, char32_t codepoint) const;

  /// Keys of a partition in a fixed order: fonts in record order, then
  /// characters in charset order. Skipped pairs are absent.
  std::vector<Key> partition_keys(Partition partition) const;
  std::vector<const GlyphImage*> partition_images(Partition partition) const;

  /// Throws if a split or range invariant is broken.
  void validate() const;

  /// Writes <root>/images/<font_id>/<U+XXXX>.png and <root>/manifest.json.
  void save(const std::filesystem::path& root) const;
  /// Loads and verifies every per-file checksum.
  static FontDataset load(const std::filesystem::path& root);
};

/// Pixels of one partition, read through the manifest's file lists only. This
/// is the path the trainer uses: it needs neither categories nor codepoints.
std::vector<GlyphImage> load_partition_images(const std::filesystem::path& root, Partition partition);

struct BuildOptions {
  int image_size = 128;
  unsigned workers = 1;
};

/// Rasterizes every (font, used character) pair. Missing or empty glyphs are
/// skipped and logged in `skipped` rather than aborting.
FontDataset build_dataset(const std::vector<FontRecord>& fonts, const std::vector<char32_t>& charset,
                          const SplitRequest& split, const BuildOptions& options = {});

/// Reads a UTF-8 text file and returns its distinct non-whitespace codepoints
/// in first-seen order.
std::vector<char32_t> read_charset_file(const std::filesystem::path& path);
std::vector<char32_t> decode_utf8(std::string_view text);

}  // namespace ffgan
