#include "regionsel/network.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "regionsel/error.hpp"
#include "regionsel/parallel.hpp"

namespace regionsel {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void check_conv(const ConvLayer& c) {
  if (c.in_channels < 1 || c.out_channels < 1) throw ValidationError("conv layer needs positive channel counts");
  if (c.ksize < 1 || c.ksize % 2 == 0) throw ValidationError("conv kernel size must be odd");
  if (c.stride != 1 && c.stride != 2) throw ValidationError("conv stride must be 1 or 2");
  if (c.weights.size() != static_cast<std::size_t>(c.out_channels) * c.in_channels * c.ksize * c.ksize ||
      c.bias.size() != static_cast<std::size_t>(c.out_channels)) {
    throw DimensionError("conv parameter buffers do not match the descriptor");
  }
}

struct Shape {
  int channels;
  int height;
  int width;
};

Shape conv_shape(const ConvLayer& c, const Shape& in) {
  check_conv(c);
  if (c.in_channels != in.channels) {
    throw DimensionError("conv expects " + std::to_string(c.in_channels) + " channels, got " +
                         std::to_string(in.channels));
  }
  const Shape out{c.out_channels, c.output_extent(in.height), c.output_extent(in.width)};
  if (out.height < 1 || out.width < 1) throw DimensionError("conv output would be empty");
  return out;
}

bool nested_region() { return omp_in_parallel() != 0; }

// out[oc] += sum over taps of w * in[ic] shifted; one output plane per oc.
void conv_forward_planes(const ConvLayer& L, const Tensor& in, Tensor& out, bool parallel) {
  const int p = L.ksize / 2;
  const int s = L.stride;
  const int k = L.ksize;
#pragma omp parallel for schedule(static) if (parallel)
  for (int oc = 0; oc < L.out_channels; ++oc) {
    double* dst = out.plane(oc);
    std::fill(dst, dst + static_cast<std::size_t>(out.height) * out.width, L.bias[oc]);
    for (int ic = 0; ic < L.in_channels; ++ic) {
      const double* src = in.plane(ic);
      const double* w = L.weights.data() + (static_cast<std::size_t>(oc) * L.in_channels + ic) * k * k;
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const double wv = w[ky * k + kx];
          const int ox0 = std::max(0, (p - kx + s - 1) / s);
          const int ox1 = std::min(out.width - 1, (in.width - 1 - kx + p) / s);
          if (ox0 > ox1) continue;
          for (int oy = 0; oy < out.height; ++oy) {
            const int iy = oy * s + ky - p;
            if (iy < 0 || iy >= in.height) continue;
            const double* srow = src + static_cast<std::size_t>(iy) * in.width + (kx - p);
            double* drow = dst + static_cast<std::size_t>(oy) * out.width;
            if (s == 1) {
              for (int ox = ox0; ox <= ox1; ++ox) drow[ox] += wv * srow[ox];
            } else {
              for (int ox = ox0; ox <= ox1; ++ox) drow[ox] += wv * srow[2 * ox];
            }
          }
        }
      }
    }
  }
}

// Accumulates weight/bias gradients and (when d_in is non-null) the input
// gradient for one conv layer.
void conv_backward(const ConvLayer& L, const Tensor& in, const Tensor& d_out, std::vector<double>& d_w,
                   std::vector<double>& d_b, Tensor* d_in) {
  const int p = L.ksize / 2;
  const int s = L.stride;
  const int k = L.ksize;
  for (int oc = 0; oc < L.out_channels; ++oc) {
    const double* g = d_out.plane(oc);
    double bsum = 0.0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(d_out.height) * d_out.width; ++i) bsum += g[i];
    d_b[oc] += bsum;
    for (int ic = 0; ic < L.in_channels; ++ic) {
      const double* src = in.plane(ic);
      double* dsrc = d_in ? d_in->plane(ic) : nullptr;
      const std::size_t wbase = (static_cast<std::size_t>(oc) * L.in_channels + ic) * k * k;
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const double wv = L.weights[wbase + ky * k + kx];
          const int ox0 = std::max(0, (p - kx + s - 1) / s);
          const int ox1 = std::min(d_out.width - 1, (in.width - 1 - kx + p) / s);
          if (ox0 > ox1) continue;
          double acc = 0.0;
          for (int oy = 0; oy < d_out.height; ++oy) {
            const int iy = oy * s + ky - p;
            if (iy < 0 || iy >= in.height) continue;
            const double* grow = g + static_cast<std::size_t>(oy) * d_out.width;
            const std::size_t off = static_cast<std::size_t>(iy) * in.width + (kx - p);
            const double* srow = src + off;
            for (int ox = ox0; ox <= ox1; ++ox) acc += grow[ox] * srow[s * ox];
            if (dsrc) {
              double* drow = dsrc + off;
              for (int ox = ox0; ox <= ox1; ++ox) drow[s * ox] += wv * grow[ox];
            }
          }
          d_w[wbase + ky * k + kx] += acc;
        }
      }
    }
  }
}

void relu_inplace(Tensor& t) {
  for (double& v : t.data) v = v > 0.0 ? v : 0.0;
}

// Zeroes gradient entries where the pre-activation was not positive.
void relu_mask(Tensor& grad, const Tensor& pre) {
  for (std::size_t i = 0; i < grad.data.size(); ++i) {
    if (!(pre.data[i] > 0.0)) grad.data[i] = 0.0;
  }
}

void add_inplace(Tensor& a, const Tensor& b) {
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

// Per-layer forward record needed by backprop.
struct LayerTrace {
  Tensor input;
  Tensor h1;        // residual: first conv output (pre-activation)
  Tensor a1;        // residual: relu(h1)
  Tensor pre;       // residual: second + shortcut, before the final relu
};

Tensor layer_forward(const Layer& layer, const Tensor& x, LayerTrace* trace, bool parallel) {
  return std::visit(
      overloaded{
          [&](const ConvLayer& c) {
            Tensor out(c.out_channels, c.output_extent(x.height), c.output_extent(x.width));
            conv_forward_planes(c, x, out, parallel);
            return out;
          },
          [&](const ReluLayer&) {
            Tensor out = x;
            relu_inplace(out);
            return out;
          },
          [&](const ResidualBlock& b) {
            Tensor h1(b.first.out_channels, b.first.output_extent(x.height), b.first.output_extent(x.width));
            conv_forward_planes(b.first, x, h1, parallel);
            Tensor a1 = h1;
            relu_inplace(a1);
            Tensor pre(b.second.out_channels, b.second.output_extent(a1.height), b.second.output_extent(a1.width));
            conv_forward_planes(b.second, a1, pre, parallel);
            if (b.projection) {
              Tensor sc(b.projection->out_channels, b.projection->output_extent(x.height),
                        b.projection->output_extent(x.width));
              conv_forward_planes(*b.projection, x, sc, parallel);
              add_inplace(pre, sc);
            } else {
              add_inplace(pre, x);
            }
            Tensor out = pre;
            relu_inplace(out);
            if (trace) {
              trace->h1 = std::move(h1);
              trace->a1 = std::move(a1);
              trace->pre = std::move(pre);
            }
            return out;
          },
          [&](const GlobalAvgPool&) {
            Tensor out(x.channels, 1, 1);
            const std::size_t n = static_cast<std::size_t>(x.height) * x.width;
            for (int c = 0; c < x.channels; ++c) {
              const double* src = x.plane(c);
              double s = 0.0;
              for (std::size_t i = 0; i < n; ++i) s += src[i];
              out.data[c] = s / static_cast<double>(n);
            }
            return out;
          },
          [&](const DenseLayer& d) {
            Tensor out(d.outputs, 1, 1);
            for (int o = 0; o < d.outputs; ++o) {
              double s = d.bias[o];
              for (int i = 0; i < d.inputs; ++i) s += d.weights[static_cast<std::size_t>(o) * d.inputs + i] * x.data[i];
              out.data[o] = s;
            }
            return out;
          },
      },
      layer);
}

std::size_t param_blocks(const Layer& layer) {
  return std::visit(overloaded{[](const ConvLayer&) -> std::size_t { return 2; },
                               [](const ReluLayer&) -> std::size_t { return 0; },
                               [](const ResidualBlock& b) -> std::size_t { return b.projection ? 6 : 4; },
                               [](const GlobalAvgPool&) -> std::size_t { return 0; },
                               [](const DenseLayer&) -> std::size_t { return 2; }},
                    layer);
}

// Backprop through one layer. `grads` points at this layer's parameter
// blocks. Returns the gradient w.r.t. the layer input.
Tensor layer_backward(const Layer& layer, const LayerTrace& t, const Tensor& d_out, std::vector<double>* grads) {
  return std::visit(
      overloaded{
          [&](const ConvLayer& c) {
            Tensor d_in(t.input.channels, t.input.height, t.input.width);
            conv_backward(c, t.input, d_out, grads[0], grads[1], &d_in);
            return d_in;
          },
          [&](const ReluLayer&) {
            Tensor d_in = d_out;
            relu_mask(d_in, t.input);
            return d_in;
          },
          [&](const ResidualBlock& b) {
            Tensor d_pre = d_out;
            relu_mask(d_pre, t.pre);
            Tensor d_a1(t.a1.channels, t.a1.height, t.a1.width);
            conv_backward(b.second, t.a1, d_pre, grads[2], grads[3], &d_a1);
            relu_mask(d_a1, t.h1);
            Tensor d_in(t.input.channels, t.input.height, t.input.width);
            conv_backward(b.first, t.input, d_a1, grads[0], grads[1], &d_in);
            if (b.projection) {
              conv_backward(*b.projection, t.input, d_pre, grads[4], grads[5], &d_in);
            } else {
              add_inplace(d_in, d_pre);
            }
            return d_in;
          },
          [&](const GlobalAvgPool&) {
            Tensor d_in(t.input.channels, t.input.height, t.input.width);
            const std::size_t n = static_cast<std::size_t>(t.input.height) * t.input.width;
            for (int c = 0; c < t.input.channels; ++c) {
              const double g = d_out.data[c] / static_cast<double>(n);
              std::fill(d_in.plane(c), d_in.plane(c) + n, g);
            }
            return d_in;
          },
          [&](const DenseLayer& d) {
            Tensor d_in(t.input.channels, t.input.height, t.input.width);
            for (int o = 0; o < d.outputs; ++o) {
              const double g = d_out.data[o];
              grads[1][o] += g;
              for (int i = 0; i < d.inputs; ++i) {
                grads[0][static_cast<std::size_t>(o) * d.inputs + i] += g * t.input.data[i];
                d_in.data[i] += g * d.weights[static_cast<std::size_t>(o) * d.inputs + i];
              }
            }
            return d_in;
          },
      },
      layer);
}

// Loss of one sample; accumulates its gradient, scaled by inv_batch, into grads.
double sample_gradient(const Network& net, const Tensor& input, double label, double inv_batch, ParamGrads& grads) {
  const auto& layers = net.layers();
  std::vector<LayerTrace> traces(layers.size());
  Tensor x = input;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    traces[l].input = x;
    x = layer_forward(layers[l], x, &traces[l], false);
  }
  const double z = x.data[0];
  // d/dz of the logit-form BCE, averaged over the batch.
  Tensor d(1, 1, 1, (sigmoid(z) - label) * inv_batch);

  std::vector<std::size_t> offsets(layers.size() + 1, 0);
  for (std::size_t l = 0; l < layers.size(); ++l) offsets[l + 1] = offsets[l] + param_blocks(layers[l]);
  for (std::size_t l = layers.size(); l-- > 0;) {
    d = layer_backward(layers[l], traces[l], d, grads.data() + offsets[l]);
  }
  const double y = label;
  return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

void validate_layers(int input_side, const std::vector<Layer>& layers) {
  if (input_side < 1) throw ValidationError("network input side must be positive");
  if (layers.empty()) throw ValidationError("network has no layers");
  Shape shape{1, input_side, input_side};
  bool pooled = false;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& layer = layers[l];
    if (pooled && !std::holds_alternative<DenseLayer>(layer)) {
      throw ValidationError("only dense layers may follow the global average pool");
    }
    std::visit(overloaded{
                   [&](const ConvLayer& c) { shape = conv_shape(c, shape); },
                   [&](const ReluLayer&) {},
                   [&](const ResidualBlock& b) {
                     const Shape mid = conv_shape(b.first, shape);
                     if (b.second.stride != 1) throw ValidationError("second conv of a residual block must have stride 1");
                     const Shape out = conv_shape(b.second, mid);
                     if (b.projection) {
                       if (b.projection->ksize != 1) throw ValidationError("residual projection must be 1x1");
                       const Shape sc = conv_shape(*b.projection, shape);
                       if (sc.channels != out.channels || sc.height != out.height || sc.width != out.width) {
                         throw DimensionError("residual projection shape differs from the main path");
                       }
                     } else if (shape.channels != out.channels || shape.height != out.height ||
                                shape.width != out.width) {
                       throw DimensionError("identity shortcut needs matching shapes; add a projection");
                     }
                     shape = out;
                   },
                   [&](const GlobalAvgPool&) {
                     if (pooled) throw ValidationError("at most one global average pool");
                     pooled = true;
                     shape = {shape.channels, 1, 1};
                   },
                   [&](const DenseLayer& d) {
                     if (shape.height != 1 || shape.width != 1) {
                       throw DimensionError("dense layer needs a pooled (Cx1x1) input");
                     }
                     if (d.inputs != shape.channels || d.outputs < 1 ||
                         d.weights.size() != static_cast<std::size_t>(d.inputs) * d.outputs ||
                         d.bias.size() != static_cast<std::size_t>(d.outputs)) {
                       throw DimensionError("dense layer parameters do not match its input");
                     }
                     shape = {d.outputs, 1, 1};
                   },
               },
               layer);
  }
  if (!std::holds_alternative<DenseLayer>(layers.back())) {
    throw ValidationError("network must end with a dense layer");
  }
  if (shape.channels != 1 || shape.height != 1 || shape.width != 1) {
    throw DimensionError("network must produce exactly one scalar");
  }
}

void pairwise_sum(std::vector<ParamGrads>& parts) {
  for (std::size_t step = 1; step < parts.size(); step *= 2) {
    for (std::size_t i = 0; i + step < parts.size(); i += 2 * step) {
      ParamGrads& a = parts[i];
      const ParamGrads& b = parts[i + step];
      for (std::size_t blk = 0; blk < a.size(); ++blk) {
        for (std::size_t j = 0; j < a[blk].size(); ++j) a[blk][j] += b[blk][j];
      }
    }
  }
}

}  // namespace

Network::Network(int input_side, std::vector<Layer> layers, InputTransform input)
    : input_side_(input_side), input_(input), layers_(std::move(layers)) {
  if (!(input_.gain > 0.0) || !std::isfinite(input_.gain)) throw ValidationError("input gain must be positive");
  if (input_.mode != InputNorm::Center && input_.mode != InputNorm::Standardize && input_.mode != InputNorm::None) {
    throw ValidationError("unknown input normalization");
  }
  validate_layers(input_side_, layers_);
}

std::vector<std::span<double>> Network::parameters() {
  std::vector<std::span<double>> out;
  auto conv = [&](ConvLayer& c) {
    out.emplace_back(c.weights);
    out.emplace_back(c.bias);
  };
  for (auto& layer : layers_) {
    std::visit(overloaded{[&](ConvLayer& c) { conv(c); }, [](ReluLayer&) {},
                          [&](ResidualBlock& b) {
                            conv(b.first);
                            conv(b.second);
                            if (b.projection) conv(*b.projection);
                          },
                          [](GlobalAvgPool&) {},
                          [&](DenseLayer& d) {
                            out.emplace_back(d.weights);
                            out.emplace_back(d.bias);
                          }},
               layer);
  }
  return out;
}

std::vector<std::span<const double>> Network::parameters() const {
  auto mutable_spans = const_cast<Network*>(this)->parameters();
  return {mutable_spans.begin(), mutable_spans.end()};
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (auto s : parameters()) n += s.size();
  return n;
}

bool operator==(const Network& a, const Network& b) {
  if (a.input_side_ != b.input_side_ || a.input_ != b.input_ ||
      a.layers_.size() != b.layers_.size()) {
    return false;
  }
  for (std::size_t l = 0; l < a.layers_.size(); ++l) {
    if (a.layers_[l].index() != b.layers_[l].index()) return false;
  }
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (!std::equal(pa[i].begin(), pa[i].end(), pb[i].begin(), pb[i].end())) return false;
  }
  return true;
}

ParamGrads zero_grads(const Network& net) {
  ParamGrads g;
  for (auto s : net.parameters()) g.emplace_back(s.size(), 0.0);
  return g;
}

Tensor prepare_input(const Network& net, const Image& patch) {
  if (patch.height() != net.input_side() || patch.width() != net.input_side()) {
    throw DimensionError("patch " + std::to_string(patch.height()) + "x" + std::to_string(patch.width()) +
                         " does not match network input " + std::to_string(net.input_side()));
  }
  Tensor t(1, patch.height(), patch.width());
  std::copy(patch.pixels().begin(), patch.pixels().end(), t.data.begin());
  const InputTransform& tf = net.input_transform();
  if (tf.mode == InputNorm::None) {
    for (double& v : t.data) v *= tf.gain;
    return t;
  }
  const double n = static_cast<double>(t.data.size());
  double mean = 0.0;
  for (double v : t.data) mean += v;
  mean /= n;
  double scale = tf.gain;
  if (tf.mode == InputNorm::Standardize) {
    double var = 0.0;
    for (double v : t.data) var += (v - mean) * (v - mean);
    var /= n;
    scale = var > 1e-12 ? 1.0 / std::sqrt(var) : 0.0;
  }
  for (double& v : t.data) v = (v - mean) * scale;
  return t;
}

double logit(const Network& net, const Tensor& input) {
  const bool parallel = !nested_region() && jobs() > 1;
  Tensor x = input;
  for (const auto& layer : net.layers()) x = layer_forward(layer, x, nullptr, parallel);
  return x.data[0];
}

double logit(const Network& net, const Image& patch) { return logit(net, prepare_input(net, patch)); }

double sigmoid(double z) {
  constexpr double lo = std::numeric_limits<double>::denorm_min();
  const double hi = std::nextafter(1.0, 0.0);
  const double p = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  return std::clamp(p, lo, hi);
}

double forward(const Network& net, const Image& patch) { return sigmoid(logit(net, patch)); }

double bce_loss(std::span<const double> y_hat, std::span<const int> y) {
  if (y_hat.size() != y.size()) throw DimensionError("bce_loss: prediction and label counts differ");
  if (y.empty()) throw ValidationError("bce_loss: empty batch");
  constexpr double tiny = std::numeric_limits<double>::min();
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double p = y_hat[i];
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("bce_loss: probability outside [0,1]");
    if (y[i] != 0 && y[i] != 1) throw ValidationError("bce_loss: labels must be 0 or 1");
    sum += y[i] == 1 ? -std::log(std::max(p, tiny)) : -std::log1p(-std::min(p, 1.0 - 0x1p-53));
  }
  return sum / static_cast<double>(y.size());
}

double bce_loss_from_logits(std::span<const double> logits, std::span<const int> y) {
  if (logits.size() != y.size()) throw DimensionError("bce_loss: logit and label counts differ");
  if (y.empty()) throw ValidationError("bce_loss: empty batch");
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double z = logits[i];
    sum += std::max(z, 0.0) - z * y[i] + std::log1p(std::exp(-std::abs(z)));
  }
  return sum / static_cast<double>(y.size());
}

BatchGradient backward(const Network& net, std::span<const LabeledInput> batch) {
  if (batch.empty()) throw ValidationError("backward: empty batch");
  const double inv = 1.0 / static_cast<double>(batch.size());
  std::vector<ParamGrads> parts(batch.size());
  std::vector<double> losses(batch.size());
  parallel_for(batch.size(), [&](std::size_t i) {
    if (batch[i].input->channels != 1 || batch[i].input->height != net.input_side() ||
        batch[i].input->width != net.input_side()) {
      throw DimensionError("backward: input does not match network input");
    }
    parts[i] = zero_grads(net);
    losses[i] = sample_gradient(net, *batch[i].input, batch[i].label, inv, parts[i]);
  });
  pairwise_sum(parts);
  double loss = 0.0;
  for (double l : losses) loss += l;
  return {loss * inv, std::move(parts[0])};
}

ConvLayer make_conv(int in_channels, int out_channels, int ksize, int stride, std::uint64_t& state) {
  ConvLayer c{in_channels, out_channels, ksize, stride, {}, {}};
  const std::size_t n = static_cast<std::size_t>(out_channels) * in_channels * ksize * ksize;
  std::mt19937_64 rng(state);
  state = rng();
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / (in_channels * ksize * ksize)));
  c.weights.resize(n);
  for (double& w : c.weights) w = dist(rng);
  c.bias.assign(out_channels, 0.0);
  return c;
}

DenseLayer make_dense(int inputs, int outputs, std::uint64_t& state) {
  DenseLayer d{inputs, outputs, {}, {}};
  std::mt19937_64 rng(state);
  state = rng();
  std::normal_distribution<double> dist(0.0, std::sqrt(1.0 / inputs));
  d.weights.resize(static_cast<std::size_t>(inputs) * outputs);
  for (double& w : d.weights) w = dist(rng);
  d.bias.assign(outputs, 0.0);
  return d;
}

Network make_small_resnet(const SmallResNetSpec& spec, std::uint64_t seed) {
  if (spec.stage_channels.empty() || spec.blocks_per_stage < 1) {
    throw ValidationError("small resnet needs at least one stage with one block");
  }
  std::uint64_t state = seed;
  std::vector<Layer> layers;
  layers.emplace_back(make_conv(1, spec.stem_channels, 7, 2, state));
  layers.emplace_back(ReluLayer{});
  int channels = spec.stem_channels;
  for (int out : spec.stage_channels) {
    ResidualBlock down{make_conv(channels, out, 3, 2, state), make_conv(out, out, 3, 1, state),
                       make_conv(channels, out, 1, 2, state)};
    layers.emplace_back(std::move(down));
    for (int b = 1; b < spec.blocks_per_stage; ++b) {
      layers.emplace_back(ResidualBlock{make_conv(out, out, 3, 1, state), make_conv(out, out, 3, 1, state), {}});
    }
    channels = out;
  }
  layers.emplace_back(GlobalAvgPool{});
  layers.emplace_back(make_dense(channels, 1, state));
  return Network(spec.input_side, std::move(layers), spec.input);
}

Tensor conv2d_forward(const ConvLayer& layer, const Tensor& in) {
  const Shape s = conv_shape(layer, {in.channels, in.height, in.width});
  Tensor out(s.channels, s.height, s.width);
  conv_forward_planes(layer, in, out, !nested_region() && jobs() > 1);
  return out;
}

namespace reference {

Tensor conv2d_forward(const ConvLayer& layer, const Tensor& in) {
  const Shape s = conv_shape(layer, {in.channels, in.height, in.width});
  Tensor out(s.channels, s.height, s.width);
  const int p = layer.ksize / 2;
  const int k = layer.ksize;
  for (int oc = 0; oc < s.channels; ++oc) {
    for (int oy = 0; oy < s.height; ++oy) {
      for (int ox = 0; ox < s.width; ++ox) {
        double acc = layer.bias[oc];
        for (int ic = 0; ic < in.channels; ++ic) {
          for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
              const int iy = oy * layer.stride + ky - p;
              const int ix = ox * layer.stride + kx - p;
              if (iy < 0 || iy >= in.height || ix < 0 || ix >= in.width) continue;
              acc += layer.weights[((static_cast<std::size_t>(oc) * in.channels + ic) * k + ky) * k + kx] *
                     in.plane(ic)[static_cast<std::size_t>(iy) * in.width + ix];
            }
          }
        }
        out.plane(oc)[static_cast<std::size_t>(oy) * s.width + ox] = acc;
      }
    }
  }
  return out;
}

}  // namespace reference

}  // namespace regionsel
