#include "run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "ffgan/errors.hpp"
#include "ffgan/rng.hpp"

namespace ffgan::cli {

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"seed", KeyType::UInt, "0", "root of every random stream"},
      {"out", KeyType::String, "", "output directory (overridden by --out; $FFG_OUT/<command> when empty)"},

      {"data.font_dir", KeyType::String, "", "prepare: directory with handwritten/ and printed/ font subdirectories"},
      {"data.default_category", KeyType::String, "printed", "prepare: category of fonts placed directly in font_dir"},
      {"data.charset", KeyType::String, "", "prepare: UTF-8 text file listing the characters to render"},
      {"data.image_size", KeyType::Int, "128", "prepare: glyph raster side in pixels"},
      {"data.font_holdout", KeyType::Double, "0.2", "share of fonts held out for testing"},
      {"data.char_train_fraction", KeyType::Double, "0.8", "share of characters used for training"},
      {"data.train_chars", KeyType::Int, "0", "explicit training character count (0: use the fraction)"},
      {"data.test_chars", KeyType::Int, "0", "explicit test character count (0: the remainder)"},
      {"data.workers", KeyType::Int, "1", "prepare: rasterization threads"},

      {"synth.fonts", KeyType::Int, "4", "synth: number of procedural fonts"},
      {"synth.chars", KeyType::Int, "16", "synth: number of procedural characters"},
      {"synth.image_size", KeyType::Int, "32", "synth: glyph raster side in pixels"},

      {"model.image_size", KeyType::Int, "0", "generator output side (0: take it from the corpus)"},
      {"model.style_dim", KeyType::Int, "64", "style vector length"},
      {"model.channels", KeyType::String, "4:64,8:64,16:64,32:64,64:32,128:16", "feature channels per resolution"},

      {"train.corpus", KeyType::String, "", "corpus directory written by prepare or synth"},
      {"train.batch_size", KeyType::Int, "8", "images per batch"},
      {"train.steps", KeyType::Int, "1000", "iterations to run in this invocation"},
      {"train.lr", KeyType::Double, "0.002", "Adam learning rate for G, E and D"},
      {"train.beta1", KeyType::Double, "0", "Adam beta1"},
      {"train.beta2", KeyType::Double, "0.99", "Adam beta2"},
      {"train.adam_eps", KeyType::Double, "1e-08", "Adam epsilon"},
      {"train.lambda_adv", KeyType::Double, "1", "adversarial loss weight"},
      {"train.lambda_imgrecon", KeyType::Double, "1", "L1 reconstruction weight"},
      {"train.lambda_feat", KeyType::Double, "1", "feature matching weight"},
      {"train.gamma_r1", KeyType::Double, "10", "R1 penalty weight"},
      {"train.r1_interval", KeyType::Int, "16", "apply R1 every this many steps"},
      {"train.ema_decay", KeyType::Double, "0.999", "generator EMA decay"},
      {"train.mixing_prob", KeyType::Double, "1", "chance of a two-vector style schedule"},
      {"train.log_every", KeyType::Int, "10", "metrics row cadence in steps"},
      {"train.checkpoint_every", KeyType::Int, "0", "intermediate checkpoint cadence (0: final only)"},
      {"train.drop_last", KeyType::Bool, "true", "skip the short final batch of each epoch"},

      {"mix.checkpoint", KeyType::String, "", "checkpoint used by mix, reconstruct and sample"},
      {"mix.inject_index", KeyType::Int, "-1", "first site driven by the style image (-1: last site)"},
      {"mix.use_ema", KeyType::Bool, "true", "use the EMA generator"},
      {"sample.count", KeyType::Int, "8", "number of sampled glyphs"},
      {"grid.labels", KeyType::Bool, "true", "draw column labels"},
      {"grid.label_font", KeyType::String, "", "font for labels (empty: DejaVu Sans)"},
  };
  return keys;
}

namespace {

const ConfigKey& lookup(const std::string& key) {
  for (const auto& k : config_keys()) {
    if (k.key == key) return k;
  }
  fail(ErrorKind::Config, "unknown config key '" + key + "'");
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

template <typename T>
bool parse_number(const std::string& text, T& out) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

void check_type(const ConfigKey& k, const std::string& value) {
  bool ok = true;
  switch (k.type) {
    case KeyType::Int: {
      std::int64_t v;
      ok = parse_number(value, v);
      break;
    }
    case KeyType::UInt: {
      std::uint64_t v;
      ok = parse_number(value, v);
      break;
    }
    case KeyType::Double: {
      double v;
      ok = parse_number(value, v);
      break;
    }
    case KeyType::Bool: ok = value == "true" || value == "false"; break;
    case KeyType::String: break;
  }
  if (!ok) fail(ErrorKind::Config, "config key '" + k.key + "' has invalid value '" + value + "'");
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& k : config_keys()) values_[k.key] = k.default_value;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot read config file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  RunConfig cfg;
  cfg.merge_text(text.str(), path.string());
  return cfg;
}

void RunConfig::merge_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::Config, origin + ":" + std::to_string(number) + ": expected 'key = value'");
    }
    set(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
  }
}

void RunConfig::set(const std::string& key, const std::string& raw) {
  const ConfigKey& k = lookup(key);
  std::string value = raw;
  if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
  check_type(k, value);
  values_[key] = value;
}

void RunConfig::apply_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) fail(ErrorKind::Config, "override '" + assignment + "' is not key=value");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

const std::string& RunConfig::get(const std::string& key) const {
  lookup(key);
  return values_.at(key);
}

std::int64_t RunConfig::get_int(const std::string& key) const {
  std::int64_t v = 0;
  parse_number(get(key), v);
  return v;
}

std::uint64_t RunConfig::get_uint(const std::string& key) const {
  std::uint64_t v = 0;
  parse_number(get(key), v);
  return v;
}

double RunConfig::get_double(const std::string& key) const {
  double v = 0;
  parse_number(get(key), v);
  return v;
}

bool RunConfig::get_bool(const std::string& key) const { return get(key) == "true"; }

std::string RunConfig::dump() const {
  std::ostringstream out;
  for (const auto& k : config_keys()) {
    const auto& v = values_.at(k.key);
    out << k.key << " = ";
    if (k.type == KeyType::String) {
      out << '"' << v << '"';
    } else {
      out << v;
    }
    out << "\n";
  }
  return out.str();
}

SplitRequest RunConfig::split_request() const {
  SplitRequest r;
  r.font_holdout = get_double("data.font_holdout");
  r.char_train_fraction = get_double("data.char_train_fraction");
  if (const auto n = get_int("data.train_chars"); n > 0) r.train_chars = static_cast<std::size_t>(n);
  if (const auto n = get_int("data.test_chars"); n > 0) r.test_chars = static_cast<std::size_t>(n);
  if (get_int("data.train_chars") < 0 || get_int("data.test_chars") < 0) {
    fail(ErrorKind::Config, "character counts must be non-negative");
  }
  r.seed = fork_seed(get_uint("seed"), "split");
  return r;
}

SynthRequest RunConfig::synth_request() const {
  SynthRequest r;
  r.seed = get_uint("seed");
  r.n_fonts = static_cast<int>(get_int("synth.fonts"));
  r.n_chars = static_cast<int>(get_int("synth.chars"));
  r.image_size = static_cast<int>(get_int("synth.image_size"));
  return r;
}

TrainConfig RunConfig::train_config(int corpus_image_size) const {
  TrainConfig c;
  const auto size = get_int("model.image_size");
  c.network.image_size = size == 0 ? corpus_image_size : static_cast<int>(size);
  c.network.style_dim = static_cast<int>(get_int("model.style_dim"));
  c.network.channels = NetworkSpec::parse_channels(get("model.channels"));
  const auto batch = get_int("train.batch_size");
  if (batch < 1) fail(ErrorKind::Config, "train.batch_size must be positive");
  c.batch_size = static_cast<std::size_t>(batch);
  c.steps = get_int("train.steps");
  c.learning_rate = get_double("train.lr");
  c.beta1 = get_double("train.beta1");
  c.beta2 = get_double("train.beta2");
  c.adam_eps = get_double("train.adam_eps");
  c.weights.lambda_adv = get_double("train.lambda_adv");
  c.weights.lambda_imgrecon = get_double("train.lambda_imgrecon");
  c.weights.lambda_feat = get_double("train.lambda_feat");
  c.weights.gamma_r1 = get_double("train.gamma_r1");
  c.weights.r1_interval = static_cast<int>(get_int("train.r1_interval"));
  c.ema_decay = get_double("train.ema_decay");
  c.mixing_prob = get_double("train.mixing_prob");
  c.seed = get_uint("seed");
  c.log_every = get_int("train.log_every");
  c.checkpoint_every = get_int("train.checkpoint_every");
  c.drop_last = get_bool("train.drop_last");
  c.validate();
  return c;
}

}  // namespace ffgan::cli
