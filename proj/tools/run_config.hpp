#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ffgan/glyph_data.hpp"
#include "ffgan/synth.hpp"
#include "ffgan/trainer.hpp"

namespace ffgan::cli {

enum class KeyType { Int, UInt, Double, Bool, String };

struct ConfigKey {
  std::string key;
  KeyType type;
  std::string default_value;
  std::string doc;
};

/// Every accepted key with its default, in documentation order.
const std::vector<ConfigKey>& config_keys();

/// Flat `dotted.key = value` settings. Blank lines and lines starting with '#'
/// are ignored; values run to the end of the line and may be double-quoted.
/// Unknown keys and values of the wrong type are Config errors naming the key.
class RunConfig {
 public:
  RunConfig();

  static RunConfig from_file(const std::filesystem::path& path);
  void merge_text(const std::string& text, const std::string& origin);

  void set(const std::string& key, const std::string& value);
  /// "key=value", as given to --set.
  void apply_assignment(const std::string& assignment);

  const std::string& get(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  /// The resolved configuration in the same syntax, one key per line.
  std::string dump() const;

  SplitRequest split_request() const;
  SynthRequest synth_request() const;
  /// image_size = 0 in the config means "take it from the corpus".
  TrainConfig train_config(int corpus_image_size) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace ffgan::cli
