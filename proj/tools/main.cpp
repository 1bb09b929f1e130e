#include <cstdio>
#include <deque>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace ffgan;
using namespace ffgan::cli;

int main(int argc, char** argv) {
  CLI::App app{"ffgan: font style fusion GAN (train, mix, reconstruct, sample)"};
  app.set_version_flag("--version", std::string("ffgan ") + FFGAN_VERSION);
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::string> config_path, out_flag;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "config file of dotted key = value lines");
  app.add_option("--seed", seed, "root random seed (key: seed)");
  app.add_option("--out", out_flag, "output directory (default: $FFG_OUT/<command>)");
  app.add_option("--set", overrides, "override a config key, key=value (repeatable)");

  // Subcommand flags that map onto config keys.
  std::deque<std::pair<std::string, std::optional<std::string>>> mapped;
  auto keyed = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
    mapped.emplace_back(key, std::nullopt);
    sub->add_option(flag, mapped.back().second, help + " (key: " + key + ")");
  };

  CommandArgs args;

  auto* prepare = app.add_subcommand("prepare", "rasterize a font directory into a corpus");
  keyed(prepare, "--fonts", "data.font_dir", "font directory");
  keyed(prepare, "--charset", "data.charset", "UTF-8 character list file");
  keyed(prepare, "--size", "data.image_size", "glyph side in pixels");

  auto* synth = app.add_subcommand("synth", "write a procedural corpus");
  keyed(synth, "--fonts", "synth.fonts", "font count");
  keyed(synth, "--chars", "synth.chars", "character count");
  keyed(synth, "--size", "synth.image_size", "glyph side in pixels");

  auto* train = app.add_subcommand("train", "train G, E and D on a corpus");
  keyed(train, "--corpus", "train.corpus", "corpus directory");
  keyed(train, "--steps", "train.steps", "iterations to run (added to the step count on --resume)");
  train->add_option("--resume", args.resume, "continue from this checkpoint");

  auto* mix = app.add_subcommand("mix", "content from one glyph, style from another");
  keyed(mix, "--checkpoint", "mix.checkpoint", "trained checkpoint");
  keyed(mix, "--inject-index", "mix.inject_index", "first site taken from the style image");
  mix->add_option("--content", args.content, "content glyph PNG")->required();
  mix->add_option("--style", args.style, "style glyph PNG")->required();

  auto* reconstruct = app.add_subcommand("reconstruct", "encode and regenerate one glyph");
  keyed(reconstruct, "--checkpoint", "mix.checkpoint", "trained checkpoint");
  reconstruct->add_option("--input", args.input, "glyph PNG")->required();

  auto* sample = app.add_subcommand("sample", "generate glyphs from random style vectors");
  keyed(sample, "--checkpoint", "mix.checkpoint", "trained checkpoint");
  keyed(sample, "--count", "sample.count", "number of glyphs");

  auto* grid = app.add_subcommand("grid", "tile <row>_{handwritten,printed,mixed}.png triples into one figure");
  grid->add_option("--input", args.input, "directory of triples")->required();

  bool raw = false;
  for (auto* sub : {mix, reconstruct, sample}) sub->add_flag("--raw", raw, "use raw instead of EMA generator weights");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string command = chosen->get_name();
  try {
    RunConfig config = config_path ? RunConfig::from_file(*config_path) : RunConfig();
    for (const auto& o : overrides) config.apply_assignment(o);
    if (seed) config.set("seed", std::to_string(*seed));
    for (const auto& [key, value] : mapped) {
      if (value) config.set(key, *value);
    }
    if (raw) config.set("mix.use_ema", "false");
    args.out = resolve_out_dir(command, config, out_flag);

    if (command == "prepare") cmd_prepare(config, args);
    else if (command == "synth") cmd_synth(config, args);
    else if (command == "train") cmd_train(config, args);
    else if (command == "mix") cmd_mix(config, args);
    else if (command == "reconstruct") cmd_reconstruct(config, args);
    else if (command == "sample") cmd_sample(config, args);
    else if (command == "grid") cmd_grid(config, args);
    return 0;
  } catch (const Error& e) {
    std::fprintf(stderr, "ffgan %s: %s\n", command.c_str(), e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "ffgan %s: internal error: %s\n", command.c_str(), e.what());
    return 1;
  }
}
