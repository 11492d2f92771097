#include "regionsel/convolve.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "regionsel/error.hpp"
#include "regionsel/fft.hpp"

namespace regionsel {

namespace {

void require_fits(const Image& img, const Kernel& k) {
  if (k.height() > img.height() || k.width() > img.width()) {
    throw DimensionError("kernel " + std::to_string(k.height()) + "x" +
                         std::to_string(k.width()) + " is larger than image " +
                         std::to_string(img.height()) + "x" + std::to_string(img.width()));
  }
}

// Value at out-of-range position `x` of a line of length n, padded by p.
// `at(i)` reads the in-range sample i.
template <typename At>
double extend(int x, int n, int p, BoundaryMode mode, const At& at) {
  if (x >= 0 && x < n) return at(x);
  switch (mode) {
    case BoundaryMode::ReplicatePad:
      return at(std::clamp(x, 0, n - 1));
    case BoundaryMode::Periodic:
      return at(((x % n) + n) % n);
    case BoundaryMode::EdgeTaper: {
      // Distance along the wrap gap measured from the right edge.
      const int t = x >= n ? x - (n - 1) : 2 * p + 1 + x;
      const double w = 0.5 * (1.0 - std::cos(std::numbers::pi * t / (2.0 * p + 1.0)));
      return (1.0 - w) * at(n - 1) + w * at(0);
    }
  }
  return 0.0;
}

Image convolve_padded_valid(const Image& padded, const Kernel& k, int out_h, int out_w,
                            bool parallel) {
  Image out(out_h, out_w, 0.0);
  const int kh = k.height();
  const int kw = k.width();
  const int last_r = kh - 1;
  const int last_c = kw - 1;
#pragma omp parallel for schedule(static) if (parallel)
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kh; ++i) {
        const int pr = y + last_r - i;
        for (int j = 0; j < kw; ++j) acc += k(i, j) * padded(pr, x + last_c - j);
      }
      out(y, x) = acc;
    }
  }
  return out;
}

Image convolve_direct_impl(const Image& img, const Kernel& k, BoundaryMode mode, bool parallel) {
  require_fits(img, k);
  Image padded = pad(img, k.half_height(), k.half_width(), mode);
  return convolve_padded_valid(padded, k, img.height(), img.width(), parallel);
}

}  // namespace

Image pad(const Image& img, int pad_rows, int pad_cols, BoundaryMode mode) {
  if (pad_rows < 0 || pad_cols < 0) throw DimensionError("negative padding");
  const int h = img.height();
  const int w = img.width();
  const int pw = w + 2 * pad_cols;
  const int ph = h + 2 * pad_rows;

  Image wide(h, pw, 0.0);
  for (int r = 0; r < h; ++r) {
    auto at = [&](int c) { return img(r, c); };
    for (int c = 0; c < pw; ++c) wide(r, c) = extend(c - pad_cols, w, pad_cols, mode, at);
  }
  Image out(ph, pw, 0.0);
  for (int c = 0; c < pw; ++c) {
    auto at = [&](int r) { return wide(r, c); };
    for (int r = 0; r < ph; ++r) out(r, c) = extend(r - pad_rows, h, pad_rows, mode, at);
  }
  return out;
}

Image convolve_direct(const Image& img, const Kernel& k, BoundaryMode mode) {
  return convolve_direct_impl(img, k, mode, true);
}

Image convolve_fft(const Image& img, const Kernel& k, BoundaryMode mode) {
  require_fits(img, k);
  const int ch = k.half_height();
  const int cw = k.half_width();
  Image padded = pad(img, ch, cw, mode);
  Spectrum data = forward_fft(padded);
  const Spectrum otf = kernel_transfer(k, padded.height(), padded.width());
  for (std::size_t i = 0; i < data.bins.size(); ++i) data.bins[i] *= otf.bins[i];
  return crop(inverse_fft(data), ch, cw, img.height(), img.width());
}

Image convolve(const Image& img, const Kernel& k, BoundaryMode mode) {
  constexpr int kDirectMaxTaps = 81;
  if (k.height() * k.width() <= kDirectMaxTaps) return convolve_direct(img, k, mode);
  return convolve_fft(img, k, mode);
}

Image resample(const Image& img, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw ValidationError("resample scale must be positive, got " + std::to_string(scale));
  }
  const int h = static_cast<int>(std::lround(img.height() * scale));
  const int w = static_cast<int>(std::lround(img.width() * scale));
  if (h < 1 || w < 1) {
    throw DimensionError("resampling " + std::to_string(img.height()) + "x" +
                         std::to_string(img.width()) + " by " + std::to_string(scale) +
                         " gives an empty image");
  }
  return resample_to(img, h, w);
}

Image resample_to(const Image& img, int height, int width) {
  if (height < 1 || width < 1) throw DimensionError("resample target must be non-empty");
  if (height == img.height() && width == img.width()) return img;
  auto source_coord = [](int dst, int n_dst, int n_src) {
    if (n_dst == 1) return 0.5 * (n_src - 1);
    return static_cast<double>(dst) * (n_src - 1) / (n_dst - 1);
  };
  Image out(height, width, 0.0);
  for (int r = 0; r < height; ++r) {
    const double sy = source_coord(r, height, img.height());
    const int y0 = std::min(static_cast<int>(std::floor(sy)), img.height() - 1);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double fy = sy - y0;
    for (int c = 0; c < width; ++c) {
      const double sx = source_coord(c, width, img.width());
      const int x0 = std::min(static_cast<int>(std::floor(sx)), img.width() - 1);
      const int x1 = std::min(x0 + 1, img.width() - 1);
      const double fx = sx - x0;
      const double top = (1.0 - fx) * img(y0, x0) + fx * img(y0, x1);
      const double bottom = (1.0 - fx) * img(y1, x0) + fx * img(y1, x1);
      out(r, c) = (1.0 - fy) * top + fy * bottom;
    }
  }
  return out;
}

Image gaussian_blur(const Image& img, double sigma) {
  if (sigma <= 0.0) return img;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    taps[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += taps[i + radius];
  }
  for (double& t : taps) t /= sum;

  const int h = img.height();
  const int w = img.width();
  Image tmp(h, w, 0.0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += taps[i + radius] * img(r, std::clamp(c + i, 0, w - 1));
      tmp(r, c) = acc;
    }
  }
  Image out(h, w, 0.0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += taps[i + radius] * tmp(std::clamp(r + i, 0, h - 1), c);
      out(r, c) = acc;
    }
  }
  return out;
}

Image crop(const Image& img, int row0, int col0, int height, int width) {
  if (row0 < 0 || col0 < 0 || height < 1 || width < 1 || row0 + height > img.height() ||
      col0 + width > img.width()) {
    throw DimensionError("crop window (" + std::to_string(row0) + "," + std::to_string(col0) +
                         ") " + std::to_string(height) + "x" + std::to_string(width) +
                         " exceeds image " + std::to_string(img.height()) + "x" +
                         std::to_string(img.width()));
  }
  Image out(height, width, 0.0);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) out(r, c) = img(row0 + r, col0 + c);
  }
  return out;
}

namespace reference {

Image convolve_direct(const Image& img, const Kernel& k, BoundaryMode mode) {
  return convolve_direct_impl(img, k, mode, false);
}

}  // namespace reference

}  // namespace regionsel
