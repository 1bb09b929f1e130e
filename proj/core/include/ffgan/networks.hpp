#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

namespace ffgan {

/// Shape of the three networks. The generator has one resolution block per
/// power of two from 4 up to image_size, each ending in an AdaIN injection
/// site, plus one extra site on a last full-resolution convolution before the
/// output layer. With the defaults that is 6 + 1 = 7 sites.
struct NetworkSpec {
  int image_size = 128;
  int style_dim = 64;
  /// Feature channels per resolution, shared by G and mirrored by E and D.
  std::map<int, int> channels{{4, 64}, {8, 64}, {16, 64}, {32, 64}, {64, 32}, {128, 16}};

  int block_count() const;  // generator resolution blocks
  int site_count() const;   // block_count() + 1
  int channels_at(int resolution) const;
  void validate() const;

  std::string channels_string() const;  // "4:64,8:64,..."
  static std::map<int, int> parse_channels(const std::string& text);

  bool operator==(const NetworkSpec&) const = default;
};

/// Leaky ReLU (slope 0.2) with the sqrt(2) gain that keeps activations at
/// unit scale under equalized-learning-rate weights.
torch::Tensor leaky_act(const torch::Tensor& x);

/// Adaptive instance normalization. x is N x C x H x W (or C x H x W), scale
/// and bias are N x C (or C). Per channel: scale * (x - mean) / sqrt(var + eps)
/// + bias, with population statistics over H x W.
torch::Tensor adain(const torch::Tensor& x, const torch::Tensor& scale, const torch::Tensor& bias,
                    double eps = 1e-8);

/// Minibatch standard deviation: appends one channel holding the average
/// cross-sample std-dev within groups of up to 4 samples. The group size is the
/// largest g <= 4 dividing the batch.
torch::Tensor minibatch_stddev(const torch::Tensor& x);

/// Linear layer with runtime weight scaling 1/sqrt(fan_in); weights are stored
/// at unit variance.
class EqualizedLinearImpl : public torch::nn::Cloneable<EqualizedLinearImpl> {
 public:
  EqualizedLinearImpl(int in_features, int out_features, torch::Tensor bias_init = {}, bool zero_weight = false);
  void reset() override;
  void initialize(at::Generator& gen);
  torch::Tensor forward(const torch::Tensor& x) const;

  torch::Tensor weight;
  torch::Tensor bias;

 private:
  int in_features_;
  int out_features_;
  torch::Tensor bias_init_;
  bool zero_weight_;
};
TORCH_MODULE(EqualizedLinear);

class EqualizedConv2dImpl : public torch::nn::Cloneable<EqualizedConv2dImpl> {
 public:
  EqualizedConv2dImpl(int in_channels, int out_channels, int kernel);
  void reset() override;
  void initialize(at::Generator& gen);
  torch::Tensor forward(const torch::Tensor& x) const;

  torch::Tensor weight;
  torch::Tensor bias;

 private:
  int in_channels_;
  int out_channels_;
  int kernel_;
};
TORCH_MODULE(EqualizedConv2d);

/// Per-site affine map from a style vector to AdaIN (scale, bias). Freshly
/// initialized, w = 0 maps to scale 1 and bias 0.
class StyleAffineImpl : public torch::nn::Cloneable<StyleAffineImpl> {
 public:
  StyleAffineImpl(int style_dim, int channels);
  void reset() override;
  std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor& w) const;
  int channels() const { return channels_; }

  EqualizedLinear affine{nullptr};

 private:
  int style_dim_;
  int channels_;
};
TORCH_MODULE(StyleAffine);

/// One style vector per injection site, stored as N x S x style_dim.
struct StyleSchedule {
  torch::Tensor per_site;

  std::int64_t sites() const { return per_site.size(1); }
  std::int64_t batch() const { return per_site.size(0); }
};

/// Sites 0..k-1 receive w1, sites k..sites-1 receive w2. w1/w2 are style_dim
/// vectors or N x style_dim batches. Throws IndexOutOfRange unless 0 <= k <= sites.
StyleSchedule make_style_schedule(const torch::Tensor& w1, const torch::Tensor& w2, int k, int sites);
StyleSchedule uniform_schedule(const torch::Tensor& w, int sites);

/// conv -> act -> AdaIN at one injection site.
class StyledConvImpl : public torch::nn::Cloneable<StyledConvImpl> {
 public:
  StyledConvImpl(int in_channels, int out_channels, int style_dim);
  void reset() override;
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& w) const;

  EqualizedConv2d conv{nullptr};
  StyleAffine style{nullptr};

 private:
  int in_channels_;
  int out_channels_;
  int style_dim_;
};
TORCH_MODULE(StyledConv);

class GeneratorImpl : public torch::nn::Cloneable<GeneratorImpl> {
 public:
  explicit GeneratorImpl(NetworkSpec spec = {});
  void reset() override;
  void initialize(at::Generator& gen);

  /// Learned 4x4 constant -> blocks of {upsample, conv, act, AdaIN(site)} ->
  /// {conv, act, AdaIN(last site)} -> 1x1 conv -> tanh. Output N x 1 x size x size.
  torch::Tensor forward(const StyleSchedule& schedule) const;

  const StyleAffineImpl& site(int index) const;
  int site_count() const { return spec_.site_count(); }
  const NetworkSpec& spec() const { return spec_; }

 private:
  NetworkSpec spec_;
  torch::Tensor const_input_;
  std::vector<StyledConv> blocks_;  // one per resolution block, then the final site
  EqualizedConv2d to_image_{nullptr};
};
TORCH_MODULE(Generator);

/// conv -> act -> conv -> act -> 2x2 average pool.
class DownBlockImpl : public torch::nn::Cloneable<DownBlockImpl> {
 public:
  DownBlockImpl(int in_channels, int out_channels);
  void reset() override;
  torch::Tensor forward(const torch::Tensor& x) const;

  EqualizedConv2d conv0{nullptr};
  EqualizedConv2d conv1{nullptr};

 private:
  int in_channels_;
  int out_channels_;
};
TORCH_MODULE(DownBlock);

/// Downsampling stack shared in shape by D and E: 1x1 from-image conv, then
/// one DownBlock per resolution until `stop_resolution` is reached.
class DownTrunkImpl : public torch::nn::Cloneable<DownTrunkImpl> {
 public:
  DownTrunkImpl(NetworkSpec spec, int stop_resolution);
  void reset() override;
  /// Output of every down block, highest resolution first.
  std::vector<torch::Tensor> forward(const torch::Tensor& images) const;
  int block_count() const { return static_cast<int>(blocks_.size()); }

 private:
  NetworkSpec spec_;
  int stop_resolution_;
  EqualizedConv2d from_image_{nullptr};
  std::vector<DownBlock> blocks_;
};
TORCH_MODULE(DownTrunk);

/// Intermediate discriminator activations used for feature matching: each
/// block's output plus the final pre-score activation.
using FeatureStack = std::vector<torch::Tensor>;

struct DiscriminatorOutput {
  torch::Tensor scores;  // N logits
  FeatureStack features;
};

class DiscriminatorImpl : public torch::nn::Cloneable<DiscriminatorImpl> {
 public:
  explicit DiscriminatorImpl(NetworkSpec spec = {});
  void reset() override;
  void initialize(at::Generator& gen);

  DiscriminatorOutput forward(const torch::Tensor& images) const;
  torch::Tensor score(const torch::Tensor& images) const { return forward(images).scores; }

  /// Down blocks plus the final 4x4 block; the feature stack has one more entry.
  int block_count() const;
  const NetworkSpec& spec() const { return spec_; }

  EqualizedLinear out{nullptr};  // zero-initialized score layer

 private:
  NetworkSpec spec_;
  DownTrunk trunk_{nullptr};
  EqualizedConv2d final_conv_{nullptr};
  EqualizedLinear fc_{nullptr};
};
TORCH_MODULE(Discriminator);

/// Fusion encoder: the discriminator's trunk shape down to 8x8, global average
/// pooling, then one linear map to style_dim. No cross-sample layers.
class EncoderImpl : public torch::nn::Cloneable<EncoderImpl> {
 public:
  explicit EncoderImpl(NetworkSpec spec = {});
  void reset() override;
  void initialize(at::Generator& gen);

  torch::Tensor forward(const torch::Tensor& images) const;  // N x style_dim

 private:
  NetworkSpec spec_;
  DownTrunk trunk_{nullptr};
  EqualizedLinear fc_{nullptr};
};
TORCH_MODULE(Encoder);

/// Fills every equalized layer of `module` with its initial values in
/// registration order.
void initialize_module(torch::nn::Module& module, at::Generator& gen);

/// Sum of all parameter bytes hashed with FNV-1a; used to assert that a step
/// left a network untouched.
std::uint64_t parameter_checksum(const torch::nn::Module& module);

}  // namespace ffgan
