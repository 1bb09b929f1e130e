#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "ffgan/errors.hpp"
#include "ffgan/networks.hpp"
#include "ffgan/trainer.hpp"

namespace ffgan::testing {

std::filesystem::path fixture_dir();
std::filesystem::path printed_fixture_font();
std::filesystem::path handwritten_fixture_font();

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);

/// 16 px networks small enough for finite differences: three resolutions,
/// four channels, style_dim 8.
NetworkSpec tiny_spec();

/// Desk-scale spec: 32 px with the default channel map.
NetworkSpec desk_spec();

/// Overwrites every parameter (biases and the zero-initialized score layer
/// included) with N(0, sigma^2) draws so no gradient is trivially zero.
void randomize_parameters(torch::nn::Module& module, std::uint64_t seed, double sigma = 0.5);

/// Central finite differences of f over every element of `params`, which
/// must be contiguous float64 tensors. f is evaluated with params perturbed
/// in place and restored afterwards.
std::vector<torch::Tensor> numeric_gradient(const std::function<double()>& f, const std::vector<torch::Tensor>& params,
                                            double h = 1e-6);

/// ||a - n|| / max(||a||, ||n||) over the concatenation of all tensors; 0 when
/// both are zero.
double relative_error(const std::vector<torch::Tensor>& analytic, const std::vector<torch::Tensor>& numeric);

/// Analytic gradient of a scalar-valued tensor function w.r.t. params.
std::vector<torch::Tensor> analytic_gradient(const std::function<torch::Tensor()>& f,
                                             const std::vector<torch::Tensor>& params);

/// Runs both and returns the relative error.
double gradient_check(const std::function<torch::Tensor()>& f, const std::vector<torch::Tensor>& params,
                      double h = 1e-6);

/// Float64 G, E and D on tiny_spec() with every parameter re-drawn, plus a
/// batch of four real images and four style vectors.
struct TinyNetworks {
  TinyNetworks();

  NetworkSpec spec;
  Generator g{nullptr};
  Encoder e{nullptr};
  Discriminator d{nullptr};
  torch::Tensor real;
  torch::Tensor w;

  /// Mixed fakes: w for the first two sites, w reversed for the rest.
  torch::Tensor fake() const;
};

/// N x 1 x s x s images with values in [-1, 1] drawn from the seed.
torch::Tensor random_images(std::int64_t n, int size, std::uint64_t seed, torch::ScalarType dtype = torch::kFloat32);

/// Kind of the ffgan::Error thrown by f, or nullopt if it returns normally.
std::optional<ErrorKind> thrown_kind(const std::function<void()>& f);

bool bitwise_equal(const torch::Tensor& a, const torch::Tensor& b);
bool same_state(const TrainState& a, const TrainState& b);

}  // namespace ffgan::testing
