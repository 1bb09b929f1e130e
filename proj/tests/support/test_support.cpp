#include "test_support.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include <unistd.h>

#include "ffgan/rng.hpp"

namespace ffgan::testing {
namespace fs = std::filesystem;

fs::path fixture_dir() { return FFGAN_FIXTURE_DIR; }
fs::path printed_fixture_font() { return fixture_dir() / "fixture_printed.ttf"; }
fs::path handwritten_fixture_font() { return fixture_dir() / "fixture_handwritten.ttf"; }

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("ffgan_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

NetworkSpec tiny_spec() {
  NetworkSpec s;
  s.image_size = 16;
  s.style_dim = 8;
  s.channels = {{4, 4}, {8, 4}, {16, 4}};
  return s;
}

NetworkSpec desk_spec() {
  NetworkSpec s;
  s.image_size = 32;
  return s;
}

void randomize_parameters(torch::nn::Module& module, std::uint64_t seed, double sigma) {
  auto gen = torch_generator(fork_seed(seed, "test.randomize"));
  torch::NoGradGuard guard;
  for (auto& p : module.parameters()) {
    p.copy_(torch::randn(p.sizes(), gen, torch::TensorOptions().dtype(torch::kFloat64)) * sigma);
  }
}

std::vector<torch::Tensor> numeric_gradient(const std::function<double()>& f, const std::vector<torch::Tensor>& params,
                                            double h) {
  std::vector<torch::Tensor> grads;
  torch::NoGradGuard guard;
  for (const auto& p : params) {
    if (p.scalar_type() != torch::kFloat64 || !p.is_contiguous()) {
      throw std::invalid_argument("numeric_gradient needs contiguous float64 tensors");
    }
    auto g = torch::zeros_like(p);
    double* data = p.data_ptr<double>();
    double* out = g.data_ptr<double>();
    for (std::int64_t i = 0; i < p.numel(); ++i) {
      const double saved = data[i];
      data[i] = saved + h;
      const double up = f();
      data[i] = saved - h;
      const double down = f();
      data[i] = saved;
      out[i] = (up - down) / (2.0 * h);
    }
    grads.push_back(g);
  }
  return grads;
}

double relative_error(const std::vector<torch::Tensor>& analytic, const std::vector<torch::Tensor>& numeric) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]).pow(2).sum().item<double>();
    na += analytic[i].pow(2).sum().item<double>();
    nn += numeric[i].pow(2).sum().item<double>();
  }
  const double scale = std::max(std::sqrt(na), std::sqrt(nn));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

std::vector<torch::Tensor> analytic_gradient(const std::function<torch::Tensor()>& f,
                                             const std::vector<torch::Tensor>& params) {
  auto value = f();
  auto grads = torch::autograd::grad({value}, params, {}, false, false, /*allow_unused=*/true);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!grads[i].defined()) grads[i] = torch::zeros_like(params[i]);
  }
  return grads;
}

double gradient_check(const std::function<torch::Tensor()>& f, const std::vector<torch::Tensor>& params, double h) {
  const auto analytic = analytic_gradient(f, params);
  // Autograd stays on inside the perturbed evaluations so f may itself
  // differentiate (R1 does).
  const auto numeric = numeric_gradient(
      [&] {
        torch::AutoGradMode enable(true);
        return f().item<double>();
      },
      params, h);
  return relative_error(analytic, numeric);
}

TinyNetworks::TinyNetworks() : spec(tiny_spec()), g(spec), e(spec), d(spec) {
  g->to(torch::kFloat64);
  e->to(torch::kFloat64);
  d->to(torch::kFloat64);
  randomize_parameters(*g, 1, 0.5);
  randomize_parameters(*e, 2, 0.5);
  randomize_parameters(*d, 3, 0.5);
  real = random_images(4, spec.image_size, 4, torch::kFloat64);
  auto gen = torch_generator(5);
  w = torch::randn({4, spec.style_dim}, gen, torch::TensorOptions().dtype(torch::kFloat64));
}

torch::Tensor TinyNetworks::fake() const {
  return g->forward(make_style_schedule(w, w.flip(0), 2, spec.site_count()));
}

torch::Tensor random_images(std::int64_t n, int size, std::uint64_t seed, torch::ScalarType dtype) {
  auto gen = torch_generator(fork_seed(seed, "test.images"));
  return torch::rand({n, 1, size, size}, gen, torch::TensorOptions().dtype(torch::kFloat64)).mul(2).sub(1).to(dtype);
}

std::optional<ErrorKind> thrown_kind(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

bool bitwise_equal(const torch::Tensor& a, const torch::Tensor& b) {
  if (a.sizes() != b.sizes() || a.scalar_type() != b.scalar_type()) return false;
  const auto ca = a.contiguous(), cb = b.contiguous();
  return std::memcmp(ca.data_ptr(), cb.data_ptr(), ca.numel() * ca.element_size()) == 0;
}

bool same_state(const TrainState& a, const TrainState& b) {
  const auto ta = a.named_tensors(), tb = b.named_tensors();
  if (ta.size() != tb.size()) return false;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (ta[i].first != tb[i].first || !bitwise_equal(ta[i].second, tb[i].second)) return false;
  }
  return true;
}

}  // namespace ffgan::testing
