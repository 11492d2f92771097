#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "regionsel/image.hpp"

namespace testing {

using regionsel::Image;
using regionsel::Kernel;

// Uniform [0,1) from the raw engine output, independent of library
// distribution implementations.
inline double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1p-53; }

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

inline Image random_image(int h, int w, std::mt19937_64& rng) {
  Image img(h, w);
  for (double& v : img.pixels()) v = unit(rng);
  return img;
}

inline Kernel random_kernel(int h, int w, std::mt19937_64& rng) {
  std::vector<double> raw(static_cast<std::size_t>(h) * w);
  for (double& v : raw) v = unit(rng) + 1e-3;
  return Kernel::normalized(h, w, raw);
}

// Sparse non-negative kernel with a random number of active taps.
inline Kernel random_sparse_kernel(int side, std::mt19937_64& rng) {
  std::vector<double> raw(static_cast<std::size_t>(side) * side, 0.0);
  const int taps = uniform_int(rng, 1, side * 2);
  for (int t = 0; t < taps; ++t) raw[rng() % raw.size()] += unit(rng) + 0.05;
  return Kernel::normalized(side, side, raw);
}

// Textbook convolution with edge replication, written independently of the
// library: out(r,c) = sum_{i,j} k(i,j) * img(clamp(r - i + hh), clamp(c - j + hw)).
inline Image oracle_convolve_replicate(const Image& img, const Kernel& k) {
  Image out(img.height(), img.width());
  const int hh = k.height() / 2;
  const int hw = k.width() / 2;
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) {
      double acc = 0.0;
      for (int i = 0; i < k.height(); ++i) {
        for (int j = 0; j < k.width(); ++j) {
          const int rr = std::clamp(r - i + hh, 0, img.height() - 1);
          const int cc = std::clamp(c - j + hw, 0, img.width() - 1);
          acc += k(i, j) * img(rr, cc);
        }
      }
      out(r, c) = acc;
    }
  }
  return out;
}

inline Image oracle_convolve_periodic(const Image& img, const Kernel& k) {
  Image out(img.height(), img.width());
  const int H = img.height();
  const int W = img.width();
  const int hh = k.height() / 2;
  const int hw = k.width() / 2;
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      double acc = 0.0;
      for (int i = 0; i < k.height(); ++i) {
        for (int j = 0; j < k.width(); ++j) {
          const int rr = ((r - i + hh) % H + H) % H;
          const int cc = ((c - j + hw) % W + W) % W;
          acc += k(i, j) * img(rr, cc);
        }
      }
      out(r, c) = acc;
    }
  }
  return out;
}

inline double max_abs_diff(const Image& a, const Image& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.pixels()[i] - b.pixels()[i]));
  return m;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("regionsel-test-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
