#include <fstream>

#include <gtest/gtest.h>

#include "ffgan/checkpoint.hpp"
#include "test_support.hpp"

using namespace ffgan;
using namespace ffgan::testing;

namespace {

TrainState trained_state() {
  TrainConfig c;
  c.network = tiny_spec();
  c.batch_size = 4;
  c.seed = 5;
  TrainState s(c);
  const auto batch = random_images(4, 16, 1);
  for (int i = 0; i < 3; ++i) train_iteration(s, batch);
  return s;
}

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST(Checkpoint, RoundTripIsBitIdentical) {
  TempDir dir("ckpt");
  const auto s = trained_state();
  save_checkpoint(s, dir / "a.ffgc");
  EXPECT_FALSE(std::filesystem::exists(dir / "a.ffgc.tmp"));
  const auto back = load_checkpoint(dir / "a.ffgc");
  EXPECT_EQ(back.step, 3);
  EXPECT_EQ(back.config.to_json(), s.config.to_json());
  EXPECT_TRUE(same_state(s, back));

  // Names carry dotted paths and cover every part of the state.
  bool saw_conv = false, saw_moment = false, saw_ema = false;
  for (const auto& [name, t] : s.named_tensors()) {
    saw_conv |= name == "g.block2.conv.weight";
    saw_moment |= name.starts_with("opt_d.") && name.ends_with(".exp_avg_sq");
    saw_ema |= name.starts_with("g_ema.");
  }
  EXPECT_TRUE(saw_conv && saw_moment && saw_ema);

  // Saving the loaded state reproduces the file byte for byte.
  save_checkpoint(back, dir / "b.ffgc");
  EXPECT_EQ(read_bytes(dir / "a.ffgc"), read_bytes(dir / "b.ffgc"));
}

TEST(Checkpoint, ResumedOptimizerContinuesIdentically) {
  TempDir dir("ckpt_opt");
  auto a = trained_state();
  save_checkpoint(a, dir / "s.ffgc");
  auto b = load_checkpoint(dir / "s.ffgc");
  const auto batch = random_images(4, 16, 9);
  train_iteration(a, batch);
  train_iteration(b, batch);
  EXPECT_TRUE(same_state(a, b));
}

TEST(Checkpoint, TruncatedFileIsCorrupt) {
  TempDir dir("ckpt_trunc");
  save_checkpoint(trained_state(), dir / "a.ffgc");
  auto bytes = read_bytes(dir / "a.ffgc");
  for (std::size_t keep : {std::size_t{0}, std::size_t{5}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
    write_bytes(dir / "t.ffgc", {bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(keep)});
    EXPECT_EQ(thrown_kind([&] { load_checkpoint(dir / "t.ffgc"); }), ErrorKind::Corrupt) << keep;
  }
}

TEST(Checkpoint, FlippedByteFailsTheChecksum) {
  TempDir dir("ckpt_flip");
  save_checkpoint(trained_state(), dir / "a.ffgc");
  auto bytes = read_bytes(dir / "a.ffgc");
  bytes[bytes.size() / 2] ^= 0x40;
  write_bytes(dir / "f.ffgc", bytes);
  EXPECT_EQ(thrown_kind([&] { load_checkpoint(dir / "f.ffgc"); }), ErrorKind::Corrupt);
  bytes = read_bytes(dir / "a.ffgc");
  bytes[0] = 'X';
  write_bytes(dir / "m.ffgc", bytes);
  EXPECT_EQ(thrown_kind([&] { load_checkpoint(dir / "m.ffgc"); }), ErrorKind::Corrupt);
}

TEST(Checkpoint, VersionBumpNamesBothVersions) {
  const auto s = trained_state();
  CheckpointContents c{.version = kCheckpointVersion + 1, .config_json = s.config.to_json(), .entries = s.named_tensors()};
  try {
    decode_checkpoint(encode_checkpoint(c));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::VersionMismatch);
    const std::string what = e.what();
    EXPECT_NE(what.find(std::to_string(kCheckpointVersion)), std::string::npos);
    EXPECT_NE(what.find(std::to_string(kCheckpointVersion + 1)), std::string::npos);
  }
}

TEST(Checkpoint, EncodingIsSelfDescribing) {
  CheckpointContents c;
  c.config_json = "{}";
  c.entries = {{"a.b", torch::tensor({1.0f, 2.0f})}, {"c", torch::tensor({int64_t{7}}, torch::kInt64)},
               {"d", torch::zeros({2, 3}, torch::kFloat64)}};
  const auto bytes = encode_checkpoint(c);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 8), "FFGANCKP");
  const auto back = decode_checkpoint(bytes);
  ASSERT_EQ(back.entries.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back.entries[i].first, c.entries[i].first);
    EXPECT_TRUE(bitwise_equal(back.entries[i].second, c.entries[i].second));
  }
}

TEST(Checkpoint, MissingEntryIsCorruptAndMissingFileIsIo) {
  auto s = trained_state();
  auto entries = s.named_tensors();
  entries.pop_back();
  EXPECT_EQ(thrown_kind([&] { s.load_named_tensors(entries); }), ErrorKind::Corrupt);
  EXPECT_EQ(thrown_kind([] { load_checkpoint("/nonexistent/dir/x.ffgc"); }), ErrorKind::Io);
}
