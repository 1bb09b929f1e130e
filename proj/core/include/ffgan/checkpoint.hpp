#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "ffgan/trainer.hpp"

namespace ffgan {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Raw checkpoint contents: a config JSON blob and named tensors.
///
/// On-disk layout, all integers little-endian:
///   "FFGANCKP"                          8-byte magic
///   u32 format_version
///   u64 n, n bytes                      TrainConfig as JSON
///   u64 entry_count
///   entry_count times:
///     u32 n, n bytes                    dotted name, e.g. g.block3.conv.weight
///     u8  dtype                         0 float32, 1 float64, 2 int64
///     u32 ndim, ndim x i64              shape
///     raw element bytes                 row-major
///   u32 crc32 of every preceding byte
struct CheckpointContents {
  std::uint32_t version = kCheckpointVersion;
  std::string config_json;
  std::vector<std::pair<std::string, torch::Tensor>> entries;
};

std::vector<std::uint8_t> encode_checkpoint(const CheckpointContents& contents);
/// Throws Corrupt (bad magic, truncation, checksum) or VersionMismatch.
CheckpointContents decode_checkpoint(const std::vector<std::uint8_t>& bytes);

/// Writes to <path>.tmp and renames, so the published path is never partial.
void save_checkpoint(const TrainState& state, const std::filesystem::path& path);
TrainState load_checkpoint(const std::filesystem::path& path);

}  // namespace ffgan
