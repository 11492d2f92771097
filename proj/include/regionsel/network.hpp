#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "regionsel/image.hpp"

namespace regionsel {

// Dense activation block, channel-major: data[(c * height + y) * width + x].
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int c, int h, int w, double fill = 0.0)
      : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

  double* plane(int c) { return data.data() + static_cast<std::size_t>(c) * height * width; }
  const double* plane(int c) const { return data.data() + static_cast<std::size_t>(c) * height * width; }
};

// Square convolution, zero padding ksize/2, weights laid out
// [out][in][ky][kx].
struct ConvLayer {
  int in_channels = 1;
  int out_channels = 1;
  int ksize = 3;
  int stride = 1;
  std::vector<double> weights;
  std::vector<double> bias;

  int output_extent(int input_extent) const { return (input_extent + 2 * (ksize / 2) - ksize) / stride + 1; }
};

struct ReluLayer {};

// relu(second(relu(first(x))) + shortcut(x)); shortcut is identity or a 1x1
// projection carrying the stride and channel change.
struct ResidualBlock {
  ConvLayer first;
  ConvLayer second;
  std::optional<ConvLayer> projection;
};

// Averages each channel over all positions, producing a channels x 1 x 1
// tensor. Only valid as the reducer in front of the dense head.
struct GlobalAvgPool {};

struct DenseLayer {
  int inputs = 1;
  int outputs = 1;
  std::vector<double> weights;  // [out][in]
  std::vector<double> bias;
};

using Layer = std::variant<ConvLayer, ReluLayer, ResidualBlock, GlobalAvgPool, DenseLayer>;

enum class InputNorm : std::uint8_t {
  Center = 0,       // (x - patch mean) * gain
  Standardize = 1,  // (x - patch mean) / patch std
  None = 2,         // x * gain
};

// Per-patch preprocessing applied before the first layer. Centering with a
// fixed gain keeps the patch contrast visible to the network.
struct InputTransform {
  InputNorm mode = InputNorm::Center;
  double gain = 8.0;

  friend bool operator==(const InputTransform&, const InputTransform&) = default;
};

// Ordered layer list mapping a 1-channel input_side x input_side patch to one
// logit. Construction checks shape compatibility, that the only spatial
// reduction besides strided convolution is a single GlobalAvgPool directly
// before the dense head, and that exactly one scalar comes out.
class Network {
 public:
  Network(int input_side, std::vector<Layer> layers, InputTransform input = {});

  int input_side() const { return input_side_; }
  const InputTransform& input_transform() const { return input_; }
  const std::vector<Layer>& layers() const { return layers_; }

  // Parameter blocks in a fixed order (per layer: weights, bias; residual
  // blocks: first, second, projection).
  std::vector<std::span<double>> parameters();
  std::vector<std::span<const double>> parameters() const;
  std::size_t parameter_count() const;

  friend bool operator==(const Network& a, const Network& b);

 private:
  int input_side_;
  InputTransform input_;
  std::vector<Layer> layers_;
};

// Gradients in Network::parameters() order.
using ParamGrads = std::vector<std::vector<double>>;

ParamGrads zero_grads(const Network& net);

// Patch -> input tensor under the network's InputTransform.
Tensor prepare_input(const Network& net, const Image& patch);

double logit(const Network& net, const Tensor& input);
double logit(const Network& net, const Image& patch);
// sigmoid(logit), kept strictly inside (0,1).
double forward(const Network& net, const Image& patch);
double sigmoid(double z);

// Mean binary cross entropy of probabilities against {0,1} labels, with the
// convention 0 * log 0 = 0 and probabilities clamped away from exact 0/1.
double bce_loss(std::span<const double> y_hat, std::span<const int> y);
// Same loss computed stably from logits.
double bce_loss_from_logits(std::span<const double> logits, std::span<const int> y);

struct LabeledInput {
  const Tensor* input;
  int label;
};

struct BatchGradient {
  double loss = 0.0;
  ParamGrads grads;
};

// Mean BCE over the batch and its gradient. Per-sample gradients are
// computed in parallel and combined with a fixed pairwise tree, so the result
// does not depend on the worker count.
BatchGradient backward(const Network& net, std::span<const LabeledInput> batch);

struct SmallResNetSpec {
  int input_side = 228;
  int stem_channels = 16;
  std::vector<int> stage_channels{16, 32, 64};
  int blocks_per_stage = 1;
  InputTransform input;
};

// 7x7 stride-2 stem, one stride-2 residual block (plus optional identity
// blocks) per stage, global average pool, dense -> one logit. Kaiming
// fan-in normal weights from `seed`, zero biases.
Network make_small_resnet(const SmallResNetSpec& spec, std::uint64_t seed);

// Kaiming-initialized layers built from explicit descriptors.
ConvLayer make_conv(int in_channels, int out_channels, int ksize, int stride, std::uint64_t& state);
DenseLayer make_dense(int inputs, int outputs, std::uint64_t& state);

Tensor conv2d_forward(const ConvLayer& layer, const Tensor& in);

namespace reference {

// Plain nested-loop convolution layer, single-threaded.
Tensor conv2d_forward(const ConvLayer& layer, const Tensor& in);

}  // namespace reference

}  // namespace regionsel
