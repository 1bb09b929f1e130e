#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "commands.hpp"
#include "ffgan/png_io.hpp"
#include "run_config.hpp"
#include "test_support.hpp"

using namespace ffgan;
using namespace ffgan::cli;
using namespace ffgan::testing;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args, const fs::path& cwd) {
  const std::string cmd = "cd '" + cwd.string() + "' && '" FFGAN_CLI_PATH "' " + args + " > cli.log 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kTinyModel =
    "--set model.style_dim=8 --set model.channels=4:4,8:4,16:4 --set train.batch_size=4 --set train.log_every=1";

}  // namespace

TEST(RunConfig, DefaultsOverridesAndErrors) {
  RunConfig c;
  EXPECT_EQ(c.get_int("train.batch_size"), 8);
  EXPECT_EQ(c.get_double("train.lr"), 2e-3);
  EXPECT_TRUE(c.get_bool("mix.use_ema"));
  c.merge_text("# comment\n\ntrain.steps = 12\nmix.checkpoint = \"a b.ffgc\"\n", "inline");
  EXPECT_EQ(c.get_int("train.steps"), 12);
  EXPECT_EQ(c.get("mix.checkpoint"), "a b.ffgc");
  c.apply_assignment("seed=9");
  EXPECT_EQ(c.get_uint("seed"), 9u);

  try {
    c.set("train.stepz", "1");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
    EXPECT_NE(std::string(e.what()).find("train.stepz"), std::string::npos);
  }
  EXPECT_EQ(thrown_kind([&] { c.set("train.steps", "many"); }), ErrorKind::Config);
  EXPECT_EQ(thrown_kind([&] { c.set("train.drop_last", "maybe"); }), ErrorKind::Config);
  try {
    c.merge_text("seed = 1\nnot an assignment\n", "file.cfg");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("file.cfg:2"), std::string::npos);
  }
}

TEST(RunConfig, DumpRoundTripsAndBuildsRequests) {
  RunConfig c;
  c.set("train.steps", "33");
  c.set("model.channels", "4:8,8:8,16:4");
  c.set("model.style_dim", "16");
  RunConfig back;
  back.merge_text(c.dump(), "dump");
  EXPECT_EQ(back.dump(), c.dump());
  const auto tc = back.train_config(16);
  EXPECT_EQ(tc.steps, 33);
  EXPECT_EQ(tc.network.image_size, 16);
  EXPECT_EQ(tc.network.style_dim, 16);
  EXPECT_EQ(tc.network.channels_at(16), 4);
  back.set("model.image_size", "32");
  EXPECT_EQ(thrown_kind([&] { back.train_config(16); }), ErrorKind::Config);
  EXPECT_EQ(c.synth_request().n_fonts, 4);
  EXPECT_DOUBLE_EQ(c.split_request().font_holdout, 0.2);
}

TEST(RunConfig, OutDirResolution) {
  RunConfig c;
  EXPECT_EQ(resolve_out_dir("train", c, std::string("x")), fs::path("x"));
  ::unsetenv("FFG_OUT");
  EXPECT_EQ(resolve_out_dir("train", c, std::nullopt), fs::path("runs") / "train");
  ::setenv("FFG_OUT", "/tmp/o", 1);
  EXPECT_EQ(resolve_out_dir("mix", c, std::nullopt), fs::path("/tmp/o") / "mix");
  c.set("out", "cfg_out");
  EXPECT_EQ(resolve_out_dir("mix", c, std::nullopt), fs::path("cfg_out"));
  ::unsetenv("FFG_OUT");
}

TEST(RunConfig, ExitCodes) {
  EXPECT_EQ(exit_code_for(ErrorKind::Config), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::Io), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::Corrupt), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::VersionMismatch), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::NonFiniteLoss), 4);
}

TEST(Cli, EndToEndSynthTrainMixReconstructSample) {
  TempDir dir("cli");
  ASSERT_EQ(run_cli("--seed 1 synth --out corpus --fonts 2 --chars 4 --size 16", dir.path()), 0) << slurp(dir / "cli.log");
  EXPECT_TRUE(fs::exists(dir / "corpus" / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir / "corpus" / "config.resolved"));

  ASSERT_EQ(run_cli(std::string("--seed 1 ") + kTinyModel + " train --corpus corpus --steps 3 --out run", dir.path()), 0)
      << slurp(dir / "cli.log");
  EXPECT_TRUE(fs::exists(dir / "run" / "checkpoint.ffgc"));
  EXPECT_EQ(slurp(dir / "run" / "VERSION").rfind("ffgan ", 0), 0u);
  std::istringstream metrics(slurp(dir / "run" / "metrics.csv"));
  std::string line;
  int lines = 0;
  while (std::getline(metrics, line)) lines += !line.empty();
  EXPECT_EQ(lines, 3);

  const std::string glyph = "corpus/images/synth00/U+E000.png";
  const std::string other = "corpus/images/synth01/U+E001.png";
  ASSERT_EQ(run_cli("mix --checkpoint run/checkpoint.ffgc --content " + glyph + " --style " + glyph +
                        " --inject-index 2 --out m",
                    dir.path()),
            0)
      << slurp(dir / "cli.log");
  ASSERT_EQ(run_cli("reconstruct --checkpoint run/checkpoint.ffgc --input " + glyph + " --out r", dir.path()), 0)
      << slurp(dir / "cli.log");
  EXPECT_EQ(read_bytes(dir / "m" / "mix.png"), read_bytes(dir / "r" / "reconstruct.png"));

  ASSERT_EQ(run_cli("mix --checkpoint run/checkpoint.ffgc --content " + glyph + " --style " + other + " --out m2",
                    dir.path()),
            0);
  EXPECT_EQ(read_png_gray8(dir / "m2" / "mix.png").width, 16);

  ASSERT_EQ(run_cli("--seed 4 sample --checkpoint run/checkpoint.ffgc --count 3 --out s1", dir.path()), 0);
  ASSERT_EQ(run_cli("--seed 4 sample --checkpoint run/checkpoint.ffgc --count 3 --out s2", dir.path()), 0);
  for (const char* f : {"sample_000.png", "sample_001.png", "sample_002.png"}) {
    EXPECT_EQ(read_bytes(dir / "s1" / f), read_bytes(dir / "s2" / f)) << f;
  }

  // Resume continues where the first run stopped.
  ASSERT_EQ(run_cli("--set train.log_every=1 train --corpus corpus --resume run/checkpoint.ffgc --steps 2 --out run2", dir.path()), 0)
      << slurp(dir / "cli.log");
  EXPECT_EQ(slurp(dir / "run2" / "metrics.csv").substr(0, 2), "3,");
}

TEST(Cli, ExitCodesForUsageAndIoErrors) {
  TempDir dir("cli_err");
  EXPECT_EQ(run_cli("--set no.such.key=1 synth --out c", dir.path()), 2);
  EXPECT_NE(slurp(dir / "cli.log").find("no.such.key"), std::string::npos);
  EXPECT_EQ(run_cli("frobnicate", dir.path()), 2);
  EXPECT_EQ(run_cli("mix --content a.png", dir.path()), 2);
  EXPECT_EQ(run_cli("reconstruct --checkpoint missing.ffgc --input a.png --out r", dir.path()), 3);
  {
    std::ofstream(dir / "bad.ffgc") << "garbage";
  }
  EXPECT_EQ(run_cli("sample --checkpoint bad.ffgc --out s", dir.path()), 3);
  EXPECT_EQ(run_cli("--version", dir.path()), 0);
}
