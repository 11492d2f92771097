#include "regionsel/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "regionsel/error.hpp"

namespace regionsel {

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading " + path.string());
  return bytes;
}

void dump(const std::string& bytes, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

// Netpbm-style header tokenizer: whitespace separated, '#' comments to EOL.
class HeaderReader {
 public:
  HeaderReader(const std::string& bytes, const std::string& name) : bytes_(bytes), name_(name) {}

  std::string token() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      ++pos_;
    }
    if (start == pos_) fail("unexpected end of header");
    return bytes_.substr(start, pos_ - start);
  }

  long integer() {
    skip_space();
    const std::size_t at = pos_;
    const std::string t = token();
    if (!std::all_of(t.begin(), t.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      throw ParseError(name_ + ": expected integer, got '" + t + "'", at);
    }
    try {
      return std::stol(t);
    } catch (const std::exception&) {
      throw ParseError(name_ + ": integer out of range '" + t + "'", at);
    }
  }

  double real() {
    skip_space();
    const std::size_t at = pos_;
    const std::string t = token();
    try {
      std::size_t used = 0;
      double v = std::stod(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      return v;
    } catch (const std::exception&) {
      throw ParseError(name_ + ": expected number, got '" + t + "'", at);
    }
  }

  // Exactly one whitespace byte separates the header from the payload.
  std::size_t payload_start() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      fail("missing separator before pixel data");
    }
    return pos_ + 1;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(name_ + ": " + what, pos_); }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& bytes_;
  const std::string& name_;
  std::size_t pos_ = 0;
};

void check_size(HeaderReader& header, long width, long height) {
  if (width < 1 || height < 1 || width > (1L << 20) || height > (1L << 20)) {
    header.fail("invalid dimensions " + std::to_string(width) + "x" + std::to_string(height));
  }
}

void require_payload(const std::string& bytes, std::size_t start, std::size_t need,
                     const std::string& name) {
  if (bytes.size() < start + need) {
    throw ParseError(name + ": truncated pixel data, expected " + std::to_string(need) +
                         " bytes, found " + std::to_string(bytes.size() - std::min(bytes.size(), start)),
                     bytes.size());
  }
}

double luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

Image parse_netpbm(const std::string& bytes, const std::string& name, bool color) {
  HeaderReader header(bytes, name);
  header.token();
  const long width = header.integer();
  const long height = header.integer();
  check_size(header, width, height);
  const long maxval = header.integer();
  if (maxval < 1 || maxval > 255) header.fail("unsupported maxval " + std::to_string(maxval));
  const std::size_t start = header.payload_start();
  const std::size_t channels = color ? 3 : 1;
  const std::size_t count = static_cast<std::size_t>(width) * height;
  require_payload(bytes, start, count * channels, name);

  std::vector<double> px(count);
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data() + start);
  const double scale = 1.0 / static_cast<double>(maxval);
  for (std::size_t i = 0; i < count; ++i) {
    if (color) {
      px[i] = luma(data[3 * i] * scale, data[3 * i + 1] * scale, data[3 * i + 2] * scale);
    } else {
      px[i] = data[i] * scale;
    }
  }
  return Image(static_cast<int>(height), static_cast<int>(width), std::move(px));
}

float load_float(const unsigned char* p, bool little_endian) {
  std::uint32_t bits = 0;
  std::memcpy(&bits, p, 4);
  if (little_endian != (std::endian::native == std::endian::little)) {
    bits = ((bits & 0xFFu) << 24) | ((bits & 0xFF00u) << 8) | ((bits >> 8) & 0xFF00u) | (bits >> 24);
  }
  float v = 0.0f;
  std::memcpy(&v, &bits, 4);
  return v;
}

Image parse_pfm(const std::string& bytes, const std::string& name, bool color) {
  HeaderReader header(bytes, name);
  header.token();
  const long width = header.integer();
  const long height = header.integer();
  check_size(header, width, height);
  const double scale = header.real();
  if (scale == 0.0) header.fail("PFM scale must be non-zero");
  const bool little = scale < 0.0;
  const std::size_t start = header.payload_start();
  const std::size_t channels = color ? 3 : 1;
  const std::size_t count = static_cast<std::size_t>(width) * height;
  require_payload(bytes, start, count * channels * 4, name);

  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data() + start);
  std::vector<double> px(count);
  for (long r = 0; r < height; ++r) {
    // PFM stores rows bottom to top.
    const long file_row = height - 1 - r;
    for (long c = 0; c < width; ++c) {
      const std::size_t src = (static_cast<std::size_t>(file_row) * width + c) * channels;
      double v = 0.0;
      if (color) {
        v = luma(load_float(data + 4 * src, little), load_float(data + 4 * (src + 1), little),
                 load_float(data + 4 * (src + 2), little));
      } else {
        v = load_float(data + 4 * src, little);
      }
      if (!std::isfinite(v)) {
        throw ParseError(name + ": non-finite pixel", start + 4 * src);
      }
      px[static_cast<std::size_t>(r) * width + c] = v;
    }
  }
  return Image(static_cast<int>(height), static_cast<int>(width), std::move(px));
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
  const std::string bytes = slurp(path);
  const std::string name = path.string();
  if (bytes.size() < 2) throw ParseError(name + ": file too short for an image header", 0);
  const std::string magic = bytes.substr(0, 2);
  if (magic == "P5") return parse_netpbm(bytes, name, false);
  if (magic == "P6") return parse_netpbm(bytes, name, true);
  if (magic == "Pf") return parse_pfm(bytes, name, false);
  if (magic == "PF") return parse_pfm(bytes, name, true);
  throw ParseError(name + ": unrecognized image magic '" + magic + "'", 0);
}

void write_image(const Image& img, const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".pgm") return write_pgm(img, path);
  if (ext == ".pfm") return write_pfm(img, path);
  throw ValidationError("unsupported image extension '" + ext + "' for " + path.string());
}

void write_pgm(const Image& img, const std::filesystem::path& path) {
  std::string bytes = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  bytes.reserve(bytes.size() + img.size());
  for (double v : img.pixels()) {
    const double clamped = std::clamp(v, 0.0, 1.0);
    bytes.push_back(static_cast<char>(static_cast<unsigned char>(std::floor(clamped * 255.0 + 0.5))));
  }
  dump(bytes, path);
}

void write_pfm(const Image& img, const std::filesystem::path& path) {
  std::string bytes = "Pf\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n-1.0\n";
  const std::size_t header = bytes.size();
  bytes.resize(header + 4 * img.size());
  char* out = bytes.data() + header;
  for (int r = img.height() - 1; r >= 0; --r) {
    for (int c = 0; c < img.width(); ++c) {
      const float v = static_cast<float>(img(r, c));
      std::uint32_t bits = 0;
      std::memcpy(&bits, &v, 4);
      for (int b = 0; b < 4; ++b) *out++ = static_cast<char>((bits >> (8 * b)) & 0xFFu);
    }
  }
  dump(bytes, path);
}

Kernel read_kernel(const std::filesystem::path& path) {
  const std::string text = slurp(path);
  const std::string name = path.string();
  std::istringstream in(text);
  auto offset = [&]() {
    in.clear();
    const auto p = in.tellg();
    return p < 0 ? text.size() : static_cast<std::size_t>(p);
  };
  long h = 0;
  long w = 0;
  if (!(in >> h >> w)) throw ParseError(name + ": expected 'side_h side_w' header", offset());
  if (h < 1 || w < 1 || h % 2 == 0 || w % 2 == 0) {
    throw ValidationError(name + ": kernel sides must be odd and positive, got " +
                          std::to_string(h) + "x" + std::to_string(w));
  }
  if (h > 4096 || w > 4096) throw ValidationError(name + ": kernel too large");
  std::vector<double> weights(static_cast<std::size_t>(h) * w);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(in >> weights[i])) {
      throw ParseError(name + ": expected " + std::to_string(weights.size()) + " weights, read " +
                           std::to_string(i),
                       offset());
    }
  }
  std::string extra;
  if (in >> extra) throw ParseError(name + ": trailing data after kernel weights", offset());
  try {
    return Kernel(static_cast<int>(h), static_cast<int>(w), std::move(weights), 1e-4);
  } catch (const ValidationError& e) {
    throw ValidationError(name + ": " + e.what());
  }
}

void write_kernel(const Kernel& k, const std::filesystem::path& path) {
  std::string out = std::to_string(k.height()) + " " + std::to_string(k.width()) + "\n";
  char buf[32];
  for (int r = 0; r < k.height(); ++r) {
    for (int c = 0; c < k.width(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", k(r, c));
      if (c) out += ' ';
      out += buf;
    }
    out += '\n';
  }
  dump(out, path);
}

}  // namespace regionsel
