#include "commands.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>

#include "ffgan/checkpoint.hpp"
#include "ffgan/glyph_data.hpp"
#include "ffgan/mixer.hpp"
#include "ffgan/png_io.hpp"
#include "ffgan/synth.hpp"
#include "ffgan/trainer.hpp"

namespace ffgan::cli {
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out << text;
}

void prepare_out_dir(const RunConfig& config, const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) fail(ErrorKind::Io, "cannot create output directory '" + out.string() + "': " + ec.message());
  write_text(out / "config.resolved", config.dump());
  write_text(out / "VERSION", std::string("ffgan ") + FFGAN_VERSION + "\n");
}

GlyphImage read_glyph_png(const fs::path& path) {
  if (!fs::is_regular_file(path)) fail(ErrorKind::Io, "no such image '" + path.string() + "'");
  const Gray8Image png = read_png_gray8(path);
  if (png.width != png.height) {
    fail(ErrorKind::ShapeMismatch, "'" + path.string() + "' is " + std::to_string(png.width) + "x" +
                                       std::to_string(png.height) + ", glyphs must be square");
  }
  return GlyphImage::from_gray8(png.pixels, png.width, path.stem().string());
}

void write_glyph_png(const fs::path& path, const GlyphImage& image) {
  write_png_gray8(path, Gray8Image{image.size, image.size, image.to_gray8()});
}

fs::path checkpoint_path(const RunConfig& config) {
  const fs::path p = config.get("mix.checkpoint");
  if (p.empty()) fail(ErrorKind::Config, "mix.checkpoint (--checkpoint) is required");
  return p;
}

FontMixer load_mixer(const RunConfig& config) {
  return FontMixer::from_checkpoint(checkpoint_path(config), config.get_bool("mix.use_ema"));
}

std::vector<FontRecord> discover_fonts(const fs::path& root, FontCategory default_category) {
  if (!fs::is_directory(root)) fail(ErrorKind::Io, "font directory '" + root.string() + "' does not exist");
  auto is_font = [](const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".ttf" || ext == ".otf" || ext == ".ttc";
  };
  std::vector<std::pair<fs::path, FontCategory>> found;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_regular_file() && is_font(entry.path())) {
      found.emplace_back(entry.path(), default_category);
    } else if (entry.is_directory()) {
      FontCategory category;
      try {
        category = parse_font_category(entry.path().filename().string());
      } catch (const Error&) {
        continue;
      }
      for (const auto& inner : fs::directory_iterator(entry.path())) {
        if (inner.is_regular_file() && is_font(inner.path())) found.emplace_back(inner.path(), category);
      }
    }
  }
  std::sort(found.begin(), found.end());
  std::vector<FontRecord> fonts;
  std::map<std::string, fs::path> seen;
  for (const auto& [path, category] : found) {
    const std::string id = path.stem().string();
    if (auto [it, fresh] = seen.emplace(id, path); !fresh) {
      fail(ErrorKind::Config, "fonts '" + it->second.string() + "' and '" + path.string() + "' share the id '" + id + "'");
    }
    fonts.push_back(FontRecord{id, id, category, path.string()});
  }
  return fonts;
}

}  // namespace

fs::path resolve_out_dir(const std::string& command, const RunConfig& config, const std::optional<std::string>& flag) {
  if (flag && !flag->empty()) return *flag;
  if (!config.get("out").empty()) return config.get("out");
  if (const char* env = std::getenv("FFG_OUT"); env && *env) return fs::path(env) / command;
  return fs::path("runs") / command;
}

void cmd_prepare(const RunConfig& config, const CommandArgs& args) {
  const fs::path font_dir = config.get("data.font_dir");
  if (font_dir.empty()) fail(ErrorKind::Config, "data.font_dir (--fonts) is required");
  const fs::path charset_file = config.get("data.charset");
  if (charset_file.empty()) fail(ErrorKind::Config, "data.charset (--charset) is required");
  const auto fonts = discover_fonts(font_dir, parse_font_category(config.get("data.default_category")));
  if (!fs::is_regular_file(charset_file)) fail(ErrorKind::Io, "charset file '" + charset_file.string() + "' does not exist");
  const auto charset = read_charset_file(charset_file);

  BuildOptions options;
  options.image_size = static_cast<int>(config.get_int("data.image_size"));
  options.workers = static_cast<unsigned>(std::max<std::int64_t>(1, config.get_int("data.workers")));
  const FontDataset ds = build_dataset(fonts, charset, config.split_request(), options);
  prepare_out_dir(config, args.out);
  ds.save(args.out);
  std::fprintf(stderr, "prepared %zu fonts x %zu characters (%zu images, %zu skipped) in %s\n", ds.records.size(),
               ds.charset.size(), ds.images.size(), ds.skipped.size(), args.out.string().c_str());
}

void cmd_synth(const RunConfig& config, const CommandArgs& args) {
  const FontDataset ds = synth_glyph_dataset(config.synth_request());
  prepare_out_dir(config, args.out);
  ds.save(args.out);
  std::fprintf(stderr, "synthesized %zu fonts x %zu characters in %s\n", ds.records.size(), ds.charset.size(),
               args.out.string().c_str());
}

void cmd_train(RunConfig config, const CommandArgs& args) {
  const fs::path corpus = config.get("train.corpus");
  if (corpus.empty()) fail(ErrorKind::Config, "train.corpus (--corpus) is required");
  if (!fs::is_regular_file(corpus / "manifest.json")) {
    fail(ErrorKind::Io, "'" + corpus.string() + "' is not a corpus directory (no manifest.json)");
  }
  auto images = load_partition_images(corpus, Partition::Train);
  if (images.empty()) fail(ErrorKind::EmptyPartition, "corpus has no training images");

  std::optional<TrainState> state;
  if (!args.resume.empty()) {
    state.emplace(load_checkpoint(args.resume));
    // Only the run length and output cadence come from this invocation.
    state->config.steps = config.get_int("train.steps");
    state->config.log_every = config.get_int("train.log_every");
    state->config.checkpoint_every = config.get_int("train.checkpoint_every");
    state->config.validate();
  } else {
    state.emplace(config.train_config(images.front().size));
  }
  prepare_out_dir(config, args.out);
  TrainRunOptions options;
  options.out_dir = args.out;
  options.on_log = [](const StepMetrics& m) {
    std::fprintf(stderr, "step %lld  d %.4f  g %.4f  r1 %.4f  recon %.4f  feat %.4f  k %d\n",
                 static_cast<long long>(m.step), m.d_loss, m.g_loss, m.r1, m.recon, m.featmatch, m.k);
  };
  const TrainResult result = train(std::move(*state), std::move(images), options);
  std::fprintf(stderr, "trained to step %lld; checkpoint %s\n", static_cast<long long>(result.state.step),
               (args.out / "checkpoint.ffgc").string().c_str());
}

void cmd_mix(const RunConfig& config, const CommandArgs& args) {
  if (args.content.empty() || args.style.empty()) fail(ErrorKind::Config, "mix needs --content and --style");
  const FontMixer mixer = load_mixer(config);
  const auto k_setting = config.get_int("mix.inject_index");
  const int k = k_setting == -1 ? default_inject_index(mixer.site_count()) : static_cast<int>(k_setting);
  const GlyphImage out = mixer.mix_fonts(read_glyph_png(args.content), read_glyph_png(args.style), k);
  prepare_out_dir(config, args.out);
  write_glyph_png(args.out / "mix.png", out);
}

void cmd_reconstruct(const RunConfig& config, const CommandArgs& args) {
  if (args.input.empty()) fail(ErrorKind::Config, "reconstruct needs --input");
  const FontMixer mixer = load_mixer(config);
  const GlyphImage out = mixer.reconstruct(read_glyph_png(args.input));
  prepare_out_dir(config, args.out);
  write_glyph_png(args.out / "reconstruct.png", out);
}

void cmd_sample(const RunConfig& config, const CommandArgs& args) {
  const FontMixer mixer = load_mixer(config);
  const auto samples = mixer.sample_font(config.get_uint("seed"), static_cast<int>(config.get_int("sample.count")));
  prepare_out_dir(config, args.out);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "sample_%03zu.png", i);
    write_glyph_png(args.out / name, samples[i]);
  }
}

void cmd_grid(const RunConfig& config, const CommandArgs& args) {
  static const std::array<std::string, 3> roles = {"handwritten", "printed", "mixed"};
  static const std::vector<std::string> labels = {"Handwritten", "Printed", "Mixed"};
  if (args.input.empty()) fail(ErrorKind::Config, "grid needs --input <directory of triples>");
  if (!fs::is_directory(args.input)) fail(ErrorKind::Io, "grid input '" + args.input.string() + "' is not a directory");

  // <prefix>_handwritten.png, <prefix>_printed.png, <prefix>_mixed.png per row.
  std::map<std::string, std::map<std::string, fs::path>> triples;
  for (const auto& entry : fs::directory_iterator(args.input)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".png") continue;
    const std::string stem = entry.path().stem().string();
    for (const auto& role : roles) {
      const std::string suffix = "_" + role;
      if (stem.size() > suffix.size() && stem.ends_with(suffix)) {
        triples[stem.substr(0, stem.size() - suffix.size())][role] = entry.path();
      }
    }
  }
  std::vector<std::vector<GlyphImage>> rows;
  for (const auto& [prefix, members] : triples) {
    std::vector<GlyphImage> row;
    for (const auto& role : roles) {
      auto it = members.find(role);
      if (it == members.end()) fail(ErrorKind::RaggedRows, "row '" + prefix + "' has no " + role + " image");
      row.push_back(read_glyph_png(it->second));
    }
    rows.push_back(std::move(row));
  }
  const Gray8Image grid = compose_grid(rows, config.get_bool("grid.labels") ? labels : std::vector<std::string>{},
                                       config.get("grid.label_font"));
  prepare_out_dir(config, args.out);
  write_png_gray8(args.out / "grid.png", grid);
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io:
    case ErrorKind::UnreadableFont:
    case ErrorKind::Corrupt:
    case ErrorKind::VersionMismatch:
      return 3;
    case ErrorKind::NonFiniteComponent:
    case ErrorKind::NonFiniteLoss:
      return 4;
    default:
      return 2;
  }
}

}  // namespace ffgan::cli
