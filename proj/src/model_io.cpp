#include "regionsel/model_io.hpp"

#include <zlib.h>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "regionsel/error.hpp"

namespace regionsel {

namespace {

constexpr std::array<char, 8> kMagic{'R', 'S', 'E', 'L', 'N', 'E', 'T', '\0'};

enum Tag : std::uint8_t { kConv = 1, kRelu = 2, kResidual = 3, kPool = 4, kDense = 5 };

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  template <class T>
  void le(T v) {
    std::array<unsigned char, sizeof(T)> raw{};
    std::uint64_t bits = 0;
    if constexpr (std::is_same_v<T, double>) {
      bits = std::bit_cast<std::uint64_t>(v);
    } else {
      bits = static_cast<std::uint64_t>(v);
    }
    for (std::size_t i = 0; i < sizeof(T); ++i) raw[i] = static_cast<unsigned char>(bits >> (8 * i));
    bytes(raw.data(), raw.size());
  }
  std::vector<unsigned char>& buffer() { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class Reader {
 public:
  Reader(const std::vector<unsigned char>& buf, std::size_t end) : buf_(buf), end_(end) {}
  void bytes(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  template <class T>
  T le() {
    need(sizeof(T));
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(buf_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    if constexpr (std::is_same_v<T, double>) {
      return std::bit_cast<double>(bits);
    } else {
      return static_cast<T>(bits);
    }
  }
  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > end_) throw ModelFormatError("model file truncated at byte " + std::to_string(pos_));
  }
  const std::vector<unsigned char>& buf_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

void put_conv(Writer& w, const ConvLayer& c) {
  w.le<std::uint32_t>(c.in_channels);
  w.le<std::uint32_t>(c.out_channels);
  w.le<std::uint32_t>(c.ksize);
  w.le<std::uint32_t>(c.stride);
}

ConvLayer get_conv(Reader& r) {
  ConvLayer c;
  c.in_channels = static_cast<int>(r.le<std::uint32_t>());
  c.out_channels = static_cast<int>(r.le<std::uint32_t>());
  c.ksize = static_cast<int>(r.le<std::uint32_t>());
  c.stride = static_cast<int>(r.le<std::uint32_t>());
  if (c.in_channels < 1 || c.out_channels < 1 || c.in_channels > 65536 || c.out_channels > 65536 || c.ksize < 1 ||
      c.ksize > 63) {
    throw ModelFormatError("implausible convolution descriptor");
  }
  c.weights.assign(static_cast<std::size_t>(c.out_channels) * c.in_channels * c.ksize * c.ksize, 0.0);
  c.bias.assign(c.out_channels, 0.0);
  return c;
}

std::uint32_t crc(const unsigned char* p, std::size_t n) {
  uLong c = crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    c = crc32(c, p, chunk);
    p += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(c);
}

}  // namespace

void save_model(const Network& net, const std::filesystem::path& path) {
  Writer w;
  w.bytes(kMagic.data(), kMagic.size());
  w.le<std::uint32_t>(kModelFormatVersion);
  w.le<std::uint32_t>(net.input_side());
  w.le<std::uint8_t>(static_cast<std::uint8_t>(net.input_transform().mode));
  w.le<double>(net.input_transform().gain);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(net.layers().size()));
  for (const auto& layer : net.layers()) {
    if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      w.le<std::uint8_t>(kConv);
      put_conv(w, *c);
    } else if (std::holds_alternative<ReluLayer>(layer)) {
      w.le<std::uint8_t>(kRelu);
    } else if (const auto* b = std::get_if<ResidualBlock>(&layer)) {
      w.le<std::uint8_t>(kResidual);
      put_conv(w, b->first);
      put_conv(w, b->second);
      w.le<std::uint8_t>(b->projection ? 1 : 0);
      if (b->projection) put_conv(w, *b->projection);
    } else if (std::holds_alternative<GlobalAvgPool>(layer)) {
      w.le<std::uint8_t>(kPool);
    } else {
      const auto& d = std::get<DenseLayer>(layer);
      w.le<std::uint8_t>(kDense);
      w.le<std::uint32_t>(d.inputs);
      w.le<std::uint32_t>(d.outputs);
    }
  }
  w.le<std::uint64_t>(net.parameter_count());
  for (auto block : net.parameters()) {
    for (double v : block) w.le<double>(v);
  }
  const std::uint32_t sum = crc(w.buffer().data(), w.buffer().size());
  w.le<std::uint32_t>(sum);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model " + path.string());
  out.write(reinterpret_cast<const char*>(w.buffer().data()), static_cast<std::streamsize>(w.buffer().size()));
  if (!out) throw IoError("failed writing model " + path.string());
}

Network load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model " + path.string());
  const std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < kMagic.size() + 4) throw ModelFormatError(path.string() + ": file too short to be a model");
  if (std::memcmp(buf.data(), kMagic.data(), kMagic.size()) != 0) {
    throw ModelFormatError(path.string() + ": bad magic bytes");
  }
  const std::size_t body = buf.size() - 4;
  Reader r(buf, body);
  std::array<char, 8> magic{};
  r.bytes(magic.data(), magic.size());
  const auto version = r.le<std::uint32_t>();
  if (version != kModelFormatVersion) {
    throw ModelFormatError(path.string() + ": unsupported format version " + std::to_string(version));
  }
  // Verify the checksum before trusting any descriptor field.
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) stored |= static_cast<std::uint32_t>(buf[body + i]) << (8 * i);
  if (crc(buf.data(), body) != stored) throw ModelFormatError(path.string() + ": checksum mismatch");

  try {
    const int side = static_cast<int>(r.le<std::uint32_t>());
    InputTransform input;
    const auto mode = r.le<std::uint8_t>();
    if (mode > static_cast<std::uint8_t>(InputNorm::None)) throw ModelFormatError("unknown input normalization");
    input.mode = static_cast<InputNorm>(mode);
    input.gain = r.le<double>();
    const auto count = r.le<std::uint32_t>();
    if (count > 4096) throw ModelFormatError("implausible layer count");
    std::vector<Layer> layers;
    for (std::uint32_t l = 0; l < count; ++l) {
      const auto tag = r.le<std::uint8_t>();
      switch (tag) {
        case kConv:
          layers.emplace_back(get_conv(r));
          break;
        case kRelu:
          layers.emplace_back(ReluLayer{});
          break;
        case kResidual: {
          ResidualBlock b{get_conv(r), get_conv(r), {}};
          if (r.le<std::uint8_t>() != 0) b.projection = get_conv(r);
          layers.emplace_back(std::move(b));
          break;
        }
        case kPool:
          layers.emplace_back(GlobalAvgPool{});
          break;
        case kDense: {
          DenseLayer d;
          d.inputs = static_cast<int>(r.le<std::uint32_t>());
          d.outputs = static_cast<int>(r.le<std::uint32_t>());
          if (d.inputs < 1 || d.outputs < 1 || d.inputs > (1 << 24) || d.outputs > (1 << 16)) {
            throw ModelFormatError("implausible dense descriptor");
          }
          d.weights.assign(static_cast<std::size_t>(d.inputs) * d.outputs, 0.0);
          d.bias.assign(d.outputs, 0.0);
          layers.emplace_back(std::move(d));
          break;
        }
        default:
          throw ModelFormatError("unknown layer tag " + std::to_string(tag));
      }
    }
    Network net(side, std::move(layers), input);
    const auto n = r.le<std::uint64_t>();
    if (n != net.parameter_count()) throw ModelFormatError("parameter count does not match the layer table");
    for (auto block : net.parameters()) {
      for (double& v : block) v = r.le<double>();
    }
    if (r.position() != body) throw ModelFormatError("trailing bytes after the parameter payload");
    return net;
  } catch (const ModelFormatError& e) {
    throw ModelFormatError(path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw ModelFormatError(path.string() + ": invalid network description: " + e.what());
  }
}

}  // namespace regionsel
