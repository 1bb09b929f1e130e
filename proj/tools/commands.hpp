#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "ffgan/errors.hpp"
#include "run_config.hpp"

namespace ffgan::cli {

/// Per-invocation inputs that are not part of the persisted configuration.
struct CommandArgs {
  std::filesystem::path out;
  std::filesystem::path resume;   // train
  std::filesystem::path content;  // mix
  std::filesystem::path style;    // mix
  std::filesystem::path input;    // reconstruct (PNG) or grid (directory)
};

/// Output directory: --out, else the `out` key, else $FFG_OUT/<command>, else
/// runs/<command>.
std::filesystem::path resolve_out_dir(const std::string& command, const RunConfig& config,
                                      const std::optional<std::string>& flag);

void cmd_prepare(const RunConfig& config, const CommandArgs& args);
void cmd_synth(const RunConfig& config, const CommandArgs& args);
void cmd_train(RunConfig config, const CommandArgs& args);
void cmd_mix(const RunConfig& config, const CommandArgs& args);
void cmd_reconstruct(const RunConfig& config, const CommandArgs& args);
void cmd_sample(const RunConfig& config, const CommandArgs& args);
void cmd_grid(const RunConfig& config, const CommandArgs& args);

/// 2 usage/config, 3 IO, 4 numeric failure.
int exit_code_for(ErrorKind kind);

}  // namespace ffgan::cli
