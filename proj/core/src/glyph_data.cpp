#include "ffgan/glyph_data.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ffgan/errors.hpp"
#include "ffgan/png_io.hpp"
#include "ffgan/rasterize.hpp"

namespace ffgan {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kManifestVersion = 1;

std::string crc32_hex(const std::vector<std::uint8_t>& bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
  return buf;
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write '" + tmp.string() + "'");
    out << text;
    if (!out) fail(ErrorKind::Io, "short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::Io, "cannot publish '" + path.string() + "': " + ec.message());
}

bool is_safe_font_id(const std::string& id) {
  if (id.empty() || id == "." || id == "..") return false;
  return std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-' || c == '.';
  });
}

std::string relative_image_path(const std::string& font_id, char32_t cp) {
  return font_id + "/" + format_codepoint(cp) + ".png";
}

template <typename T>
std::vector<T> take_in_order(const std::vector<T>& ordered, const std::set<T>& chosen) {
  std::vector<T> out;
  for (const auto& v : ordered) {
    if (chosen.count(v)) out.push_back(v);
  }
  return out;
}

json codepoints_to_json(const std::vector<char32_t>& cps) {
  json arr = json::array();
  for (char32_t cp : cps) arr.push_back(format_codepoint(cp));
  return arr;
}

std::vector<char32_t> codepoints_from_json(const json& arr) {
  std::vector<char32_t> out;
  for (const auto& v : arr) out.push_back(parse_codepoint(v.get<std::string>()));
  return out;
}

json parse_manifest(const fs::path& root) {
  const fs::path manifest = root / "manifest.json";
  if (!fs::exists(manifest)) fail(ErrorKind::Io, "no manifest at '" + manifest.string() + "'");
  const auto bytes = read_file(manifest);
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    fail(ErrorKind::Corrupt, "manifest '" + manifest.string() + "' is not valid JSON: " + e.what());
  }
  if (j.value("format", std::string{}) != "ffgan-corpus") {
    fail(ErrorKind::Corrupt, "'" + manifest.string() + "' is not an ffgan corpus manifest");
  }
  const int version = j.value("version", -1);
  if (version != kManifestVersion) {
    fail(ErrorKind::VersionMismatch, "manifest version " + std::to_string(version) + ", expected " +
                                         std::to_string(kManifestVersion));
  }
  return j;
}

GlyphImage load_checked_image(const fs::path& root, const std::string& rel, const json& files, int size,
                              std::string font_id, char32_t cp) {
  const auto bytes = read_file(root / "images" / rel);
  if (!files.contains(rel)) fail(ErrorKind::Corrupt, "manifest has no checksum for '" + rel + "'");
  if (crc32_hex(bytes) != files.at(rel).get<std::string>()) {
    fail(ErrorKind::Corrupt, "checksum mismatch for '" + rel + "'");
  }
  const Gray8Image png = read_png_gray8(root / "images" / rel);
  if (png.width != size || png.height != size) {
    fail(ErrorKind::ShapeMismatch, "'" + rel + "' is " + std::to_string(png.width) + "x" +
                                       std::to_string(png.height) + ", expected " + std::to_string(size));
  }
  GlyphImage img = GlyphImage::from_gray8(png.pixels, size, std::move(font_id), cp);
  img.validate();
  return img;
}

}  // namespace

std::string_view to_string(FontCategory category) {
  return category == FontCategory::Handwritten ? "handwritten" : "printed";
}

FontCategory parse_font_category(std::string_view text) {
  if (text == "handwritten") return FontCategory::Handwritten;
  if (text == "printed") return FontCategory::Printed;
  fail(ErrorKind::InvalidArgument, "font category must be 'handwritten' or 'printed', got '" + std::string(text) + "'");
}

DatasetSplit draw_split(const std::vector<FontRecord>& fonts, const std::vector<char32_t>& charset,
                        const SplitRequest& request) {
  if (fonts.empty()) fail(ErrorKind::InsufficientFonts, "no fonts given");
  if (request.font_holdout < 0.0 || request.font_holdout >= 1.0) {
    fail(ErrorKind::InvalidArgument, "font_holdout must lie in [0, 1)");
  }
  std::set<std::string> ids;
  for (const auto& f : fonts) {
    if (!ids.insert(f.font_id).second) fail(ErrorKind::InvalidArgument, "duplicate font_id '" + f.font_id + "'");
  }
  std::set<char32_t> distinct(charset.begin(), charset.end());
  if (distinct.size() != charset.size()) fail(ErrorKind::InvalidArgument, "charset has duplicate codepoints");

  // A tiny epsilon keeps exact products such as 0.8 * 110 from flooring to 87.
  const auto n_fonts = fonts.size();
  const auto n_train_fonts =
      static_cast<std::size_t>(std::floor((1.0 - request.font_holdout) * static_cast<double>(n_fonts) + 1e-9));
  if (n_train_fonts == 0) {
    fail(ErrorKind::InsufficientFonts, std::to_string(n_fonts) + " font(s) leave no training font at holdout " +
                                           std::to_string(request.font_holdout));
  }

  std::size_t n_train_chars = 0;
  std::size_t n_test_chars = 0;
  if (request.train_chars) {
    n_train_chars = *request.train_chars;
    n_test_chars = request.test_chars ? *request.test_chars
                                      : (charset.size() > n_train_chars ? charset.size() - n_train_chars : 0);
  } else {
    if (request.char_train_fraction <= 0.0 || request.char_train_fraction > 1.0) {
      fail(ErrorKind::InvalidArgument, "char_train_fraction must lie in (0, 1]");
    }
    n_train_chars = static_cast<std::size_t>(
        std::floor(request.char_train_fraction * static_cast<double>(charset.size()) + 1e-9));
    n_test_chars = request.test_chars ? *request.test_chars : charset.size() - n_train_chars;
  }
  if (n_train_chars == 0 || n_train_chars + n_test_chars > charset.size()) {
    fail(ErrorKind::InsufficientChars, "charset of " + std::to_string(charset.size()) + " cannot supply " +
                                           std::to_string(n_train_chars) + " train + " +
                                           std::to_string(n_test_chars) + " test characters");
  }

  std::mt19937_64 rng(request.seed);
  std::vector<std::string> font_order;
  for (const auto& f : fonts) font_order.push_back(f.font_id);
  std::vector<std::string> shuffled_fonts = font_order;
  std::shuffle(shuffled_fonts.begin(), shuffled_fonts.end(), rng);
  std::vector<char32_t> shuffled_chars = charset;
  std::shuffle(shuffled_chars.begin(), shuffled_chars.end(), rng);

  DatasetSplit split;
  split.seed = request.seed;
  const std::set<std::string> train_fonts(shuffled_fonts.begin(), shuffled_fonts.begin() + n_train_fonts);
  const std::set<std::string> test_fonts(shuffled_fonts.begin() + n_train_fonts, shuffled_fonts.end());
  const std::set<char32_t> train_chars(shuffled_chars.begin(), shuffled_chars.begin() + n_train_chars);
  const std::set<char32_t> test_chars(shuffled_chars.begin() + n_train_chars,
                                      shuffled_chars.begin() + n_train_chars + n_test_chars);
  split.train_fonts = take_in_order(font_order, train_fonts);
  split.test_fonts = take_in_order(font_order, test_fonts);
  split.train_chars = take_in_order(charset, train_chars);
  split.test_chars = take_in_order(charset, test_chars);
  return split;
}

const FontRecord& FontDataset::record(const std::string& font_id) const {
  for (const auto& r : records) {
    if (r.font_id == font_id) return r;
  }
  fail(ErrorKind::InvalidArgument, "unknown font_id '" + font_id + "'");
}

const GlyphImage* FontDataset::find(const std::string& font_id, char32_t codepoint) const {
  auto it = images.find({font_id, codepoint});
  return it == images.end() ? nullptr : &it->second;
}

std::vector<FontDataset::Key> FontDataset::partition_keys(Partition partition) const {
  const std::set<std::string> train_fonts(split.train_fonts.begin(), split.train_fonts.end());
  const std::set<std::string> test_fonts(split.test_fonts.begin(), split.test_fonts.end());
  const std::set<char32_t> train_chars(split.train_chars.begin(), split.train_chars.end());
  const std::set<char32_t> test_chars(split.test_chars.begin(), split.test_chars.end());

  std::vector<Key> keys;
  for (const auto& rec : records) {
    const bool is_train_font = train_fonts.count(rec.font_id) > 0;
    const bool is_test_font = test_fonts.count(rec.font_id) > 0;
    for (char32_t cp : charset) {
      bool wanted = false;
      if (partition == Partition::Train) {
        wanted = is_train_font && train_chars.count(cp);
      } else {
        wanted = (is_train_font && test_chars.count(cp)) ||
                 (is_test_font && (train_chars.count(cp) || test_chars.count(cp)));
      }
      if (wanted && images.count({rec.font_id, cp})) keys.emplace_back(rec.font_id, cp);
    }
  }
  return keys;
}

std::vector<const GlyphImage*> FontDataset::partition_images(Partition partition) const {
  std::vector<const GlyphImage*> out;
  for (const auto& key : partition_keys(partition)) out.push_back(&images.at(key));
  return out;
}

void FontDataset::validate() const {
  auto disjoint = [](auto a, auto b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<typename decltype(a)::value_type> both;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
    return both.empty();
  };
  if (!disjoint(split.train_fonts, split.test_fonts)) fail(ErrorKind::Corrupt, "train and test fonts overlap");
  if (!disjoint(split.train_chars, split.test_chars)) fail(ErrorKind::Corrupt, "train and test characters overlap");
  std::set<std::string> ids;
  for (const auto& r : records) {
    if (!ids.insert(r.font_id).second) fail(ErrorKind::Corrupt, "duplicate font_id '" + r.font_id + "'");
  }
  for (const auto& [key, img] : images) {
    if (img.size != image_size) fail(ErrorKind::ShapeMismatch, "stored image size differs from corpus size");
    img.validate();
    const double ink = img.ink_fraction();
    if (ink <= 0.0 || ink >= 1.0) {
      fail(ErrorKind::Corrupt, "stored glyph (" + key.first + ", " + format_codepoint(key.second) +
                                   ") is blank or fully inked");
    }
  }
  // Coverage: every train pair is stored unless it was logged as skipped.
  std::set<Key> skipped_keys;
  for (const auto& s : skipped) skipped_keys.insert({s.font_id, s.codepoint});
  for (const auto& f : split.train_fonts) {
    for (char32_t cp : split.train_chars) {
      if (!images.count({f, cp}) && !skipped_keys.count({f, cp})) {
        fail(ErrorKind::Corrupt, "train pair (" + f + ", " + format_codepoint(cp) + ") has no image");
      }
    }
  }
}

void FontDataset::save(const fs::path& root) const {
  validate();
  std::error_code ec;
  fs::create_directories(root / "images", ec);
  if (ec) fail(ErrorKind::Io, "cannot create '" + (root / "images").string() + "': " + ec.message());

  json files = json::object();
  for (const auto& [key, img] : images) {
    if (!is_safe_font_id(key.first)) fail(ErrorKind::InvalidArgument, "font_id '" + key.first + "' is not path-safe");
    fs::create_directories(root / "images" / key.first, ec);
    if (ec) fail(ErrorKind::Io, "cannot create image directory for '" + key.first + "'");
    const std::string rel = relative_image_path(key.first, key.second);
    const auto bytes = encode_png_gray8(Gray8Image{img.size, img.size, img.to_gray8()});
    std::ofstream out(root / "images" / rel, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write '" + (root / "images" / rel).string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::Io, "short write to '" + (root / "images" / rel).string() + "'");
    files[rel] = crc32_hex(bytes);
  }

  json j;
  j["format"] = "ffgan-corpus";
  j["version"] = kManifestVersion;
  j["image_size"] = image_size;
  j["seed"] = split.seed;
  json recs = json::array();
  for (const auto& r : records) {
    recs.push_back({{"font_id", r.font_id}, {"name", r.name}, {"category", to_string(r.category)},
                    {"source", r.source}});
  }
  j["records"] = recs;
  j["charset"] = codepoints_to_json(charset);
  j["split"] = {{"seed", split.seed},
                {"train_fonts", split.train_fonts},
                {"test_fonts", split.test_fonts},
                {"train_chars", codepoints_to_json(split.train_chars)},
                {"test_chars", codepoints_to_json(split.test_chars)}};
  json skips = json::array();
  for (const auto& s : skipped) {
    skips.push_back({{"font_id", s.font_id}, {"codepoint", format_codepoint(s.codepoint)}, {"reason", s.reason}});
  }
  j["skipped"] = skips;
  j["files"] = files;
  for (auto [partition, field] : {std::pair{Partition::Train, "train_files"}, std::pair{Partition::Test, "test_files"}}) {
    json list = json::array();
    for (const auto& key : partition_keys(partition)) list.push_back(relative_image_path(key.first, key.second));
    j[field] = list;
  }
  write_file_atomic(root / "manifest.json", j.dump(2) + "\n");
}

FontDataset FontDataset::load(const fs::path& root) {
  const json j = parse_manifest(root);
  FontDataset ds;
  try {
    ds.image_size = j.at("image_size").get<int>();
    for (const auto& r : j.at("records")) {
      ds.records.push_back({r.at("font_id").get<std::string>(), r.value("name", std::string{}),
                            parse_font_category(r.at("category").get<std::string>()),
                            r.value("source", std::string{})});
    }
    ds.charset = codepoints_from_json(j.at("charset"));
    const auto& s = j.at("split");
    ds.split.seed = s.at("seed").get<std::uint64_t>();
    ds.split.train_fonts = s.at("train_fonts").get<std::vector<std::string>>();
    ds.split.test_fonts = s.at("test_fonts").get<std::vector<std::string>>();
    ds.split.train_chars = codepoints_from_json(s.at("train_chars"));
    ds.split.test_chars = codepoints_from_json(s.at("test_chars"));
    for (const auto& sk : j.at("skipped")) {
      ds.skipped.push_back({sk.at("font_id").get<std::string>(), parse_codepoint(sk.at("codepoint").get<std::string>()),
                            sk.value("reason", std::string{})});
    }
    const json& files = j.at("files");
    for (auto it = files.begin(); it != files.end(); ++it) {
      const std::string rel = it.key();
      const auto slash = rel.find('/');
      if (slash == std::string::npos || rel.size() < slash + 5) fail(ErrorKind::Corrupt, "bad image path '" + rel + "'");
      const std::string font_id = rel.substr(0, slash);
      const char32_t cp = parse_codepoint(rel.substr(slash + 1, rel.size() - slash - 5));
      ds.images.emplace(Key{font_id, cp}, load_checked_image(root, rel, files, ds.image_size, font_id, cp));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Corrupt, "manifest field error: " + std::string(e.what()));
  }
  ds.validate();
  return ds;
}

std::vector<GlyphImage> load_partition_images(const fs::path& root, Partition partition) {
  const json j = parse_manifest(root);
  std::vector<GlyphImage> out;
  try {
    const int size = j.at("image_size").get<int>();
    const json& files = j.at("files");
    for (const auto& rel : j.at(partition == Partition::Train ? "train_files" : "test_files")) {
      out.push_back(load_checked_image(root, rel.get<std::string>(), files, size, {}, 0));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Corrupt, "manifest field error: " + std::string(e.what()));
  }
  if (out.empty()) fail(ErrorKind::EmptyPartition, "partition has no images in '" + root.string() + "'");
  return out;
}

FontDataset build_dataset(const std::vector<FontRecord>& fonts, const std::vector<char32_t>& charset,
                          const SplitRequest& request, const BuildOptions& options) {
  if (options.image_size < 16) fail(ErrorKind::InvalidArgument, "image size must be >= 16");
  FontDataset ds;
  ds.records = fonts;
  ds.charset = charset;
  ds.image_size = options.image_size;
  ds.split = draw_split(fonts, charset, request);
  for (const auto& f : fonts) {
    if (!is_safe_font_id(f.font_id)) fail(ErrorKind::InvalidArgument, "font_id '" + f.font_id + "' is not path-safe");
  }

  std::vector<char32_t> used;
  {
    const std::set<char32_t> in_split(ds.split.train_chars.begin(), ds.split.train_chars.end());
    const std::set<char32_t> in_test(ds.split.test_chars.begin(), ds.split.test_chars.end());
    for (char32_t cp : charset) {
      if (in_split.count(cp) || in_test.count(cp)) used.push_back(cp);
    }
  }

  std::vector<FontFile> files;
  files.reserve(fonts.size());
  for (const auto& f : fonts) files.push_back(FontFile::open(f.source));

  struct Job {
    std::size_t font;
    char32_t cp;
    std::optional<GlyphImage> image;
    std::string skip_reason;
  };
  std::vector<Job> jobs;
  for (std::size_t fi = 0; fi < fonts.size(); ++fi) {
    for (char32_t cp : used) jobs.push_back({fi, cp, std::nullopt, {}});
  }

  // Workers take a strided slice each; every job writes only its own slot.
  const unsigned n_workers = std::max(1u, std::min<unsigned>(options.workers, static_cast<unsigned>(jobs.size())));
  auto work = [&](unsigned worker) {
    for (std::size_t i = worker; i < jobs.size(); i += n_workers) {
      Job& job = jobs[i];
      try {
        job.image = files[job.font].rasterize(job.cp, options.image_size, fonts[job.font].font_id);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::MissingGlyph && e.kind() != ErrorKind::EmptyGlyph) throw;
        job.skip_reason = std::string(to_string(e.kind()));
      }
    }
  };
  if (n_workers == 1) {
    work(0);
  } else {
    std::vector<std::exception_ptr> errors(n_workers);
    std::vector<std::thread> threads;
    for (unsigned w = 0; w < n_workers; ++w) {
      threads.emplace_back([&, w] {
        try {
          work(w);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  for (auto& job : jobs) {
    const std::string& id = fonts[job.font].font_id;
    if (job.image) {
      ds.images.emplace(FontDataset::Key{id, job.cp}, std::move(*job.image));
    } else {
      ds.skipped.push_back({id, job.cp, job.skip_reason});
    }
  }
  ds.validate();
  return ds;
}

std::vector<char32_t> decode_utf8(std::string_view text) {
  std::vector<char32_t> out;
  for (std::size_t i = 0; i < text.size();) {
    const auto c = static_cast<unsigned char>(text[i]);
    int len = 0;
    char32_t cp = 0;
    if (c < 0x80) {
      len = 1;
      cp = c;
    } else if ((c >> 5) == 0x6) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c >> 4) == 0xE) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c >> 3) == 0x1E) {
      len = 4;
      cp = c & 0x07;
    } else {
      fail(ErrorKind::InvalidArgument, "invalid UTF-8 lead byte at offset " + std::to_string(i));
    }
    if (i + len > text.size()) fail(ErrorKind::InvalidArgument, "truncated UTF-8 sequence");
    for (int k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(text[i + k]);
      if ((cc >> 6) != 0x2) fail(ErrorKind::InvalidArgument, "invalid UTF-8 continuation byte");
      cp = (cp << 6) | (cc & 0x3F);
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::vector<char32_t> read_charset_file(const fs::path& path) {
  const auto bytes = read_file(path);
  std::vector<char32_t> out;
  std::set<char32_t> seen;
  for (char32_t cp : decode_utf8(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()))) {
    if (cp == U' ' || cp == U'\n' || cp == U'\r' || cp == U'\t' || cp == 0xFEFF) continue;
    if (seen.insert(cp).second) out.push_back(cp);
  }
  if (out.empty()) fail(ErrorKind::InvalidArgument, "charset file '" + path.string() + "' has no characters");
  return out;
}

}  // namespace ffgan
