#pragma once

#include <span>
#include <vector>

namespace regionsel {

// Grayscale real-valued raster, row-major. Nominal intensity range is [0,1]
// but the container only enforces finiteness, so it also carries gradient
// maps, raw kernel weights and residuals.
class Image {
 public:
  Image(int height, int width, double fill = 0.0);
  Image(int height, int width, std::vector<double> pixels);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return pixels_.size(); }

  double operator()(int row, int col) const { return pixels_[index(row, col)]; }
  double& operator()(int row, int col) { return pixels_[index(row, col)]; }

  std::span<const double> pixels() const { return pixels_; }
  std::span<double> pixels() { return pixels_; }

  bool same_shape(const Image& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int height_;
  int width_;
  std::vector<double> pixels_;
};

// Blur PSF: odd sides, non-negative weights summing to one.
class Kernel {
 public:
  static constexpr double kSumTolerance = 1e-6;

  // Validates the invariants; `sum_tolerance` bounds |sum - 1|.
  Kernel(int height, int width, std::vector<double> weights,
         double sum_tolerance = kSumTolerance);

  // 1x1 identity kernel.
  static Kernel delta();
  // Odd `side` x `side` kernel with all mass at the center.
  static Kernel delta(int side);
  // Scales non-negative raw weights to unit sum. Throws ValidationError if
  // any weight is negative or the total is zero.
  static Kernel normalized(int height, int width, std::vector<double> raw);
  static Kernel normalized(const Image& raw);

  int height() const { return height_; }
  int width() const { return width_; }
  int half_height() const { return height_ / 2; }
  int half_width() const { return width_ / 2; }
  int max_side() const { return height_ > width_ ? height_ : width_; }

  double operator()(int row, int col) const {
    return weights_[static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
                    static_cast<std::size_t>(col)];
  }
  std::span<const double> weights() const { return weights_; }

  Image as_image() const { return Image(height_, width_, weights_); }

  friend bool operator==(const Kernel&, const Kernel&) = default;

 private:
  int height_;
  int width_;
  std::vector<double> weights_;
};

}  // namespace regionsel
