#include "regionsel/image.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "regionsel/error.hpp"

namespace regionsel {

namespace {

void check_dims(int height, int width) {
  if (height < 1 || width < 1) {
    throw DimensionError("image dimensions must be positive, got " + std::to_string(height) +
                         "x" + std::to_string(width));
  }
}

}  // namespace

Image::Image(int height, int width, double fill) : height_(height), width_(width) {
  check_dims(height, width);
  if (!std::isfinite(fill)) throw ValidationError("image fill value is not finite");
  pixels_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill);
}

Image::Image(int height, int width, std::vector<double> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
  check_dims(height, width);
  if (pixels_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
    throw DimensionError("pixel buffer holds " + std::to_string(pixels_.size()) +
                         " values, expected " + std::to_string(height) + "x" +
                         std::to_string(width));
  }
  for (double v : pixels_) {
    if (!std::isfinite(v)) throw ValidationError("image contains a non-finite pixel");
  }
}

Kernel::Kernel(int height, int width, std::vector<double> weights, double sum_tolerance)
    : height_(height), width_(width), weights_(std::move(weights)) {
  if (height < 1 || width < 1 || height % 2 == 0 || width % 2 == 0) {
    throw ValidationError("kernel sides must be odd and positive, got " +
                          std::to_string(height) + "x" + std::to_string(width));
  }
  if (weights_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
    throw DimensionError("kernel holds " + std::to_string(weights_.size()) +
                         " weights, expected " + std::to_string(height * width));
  }
  double sum = 0.0;
  for (double w : weights_) {
    if (!std::isfinite(w)) throw ValidationError("kernel weight is not finite");
    if (w < 0.0) throw ValidationError("kernel weight is negative: " + std::to_string(w));
    sum += w;
  }
  if (std::abs(sum - 1.0) > sum_tolerance) {
    throw ValidationError("kernel weights sum to " + std::to_string(sum) + ", expected 1");
  }
}

Kernel Kernel::delta() { return Kernel(1, 1, {1.0}); }

Kernel Kernel::delta(int side) {
  if (side < 1 || side % 2 == 0) {
    throw ValidationError("delta kernel side must be odd, got " + std::to_string(side));
  }
  std::vector<double> w(static_cast<std::size_t>(side) * side, 0.0);
  w[static_cast<std::size_t>(side / 2) * side + side / 2] = 1.0;
  return Kernel(side, side, std::move(w));
}

Kernel Kernel::normalized(int height, int width, std::vector<double> raw) {
  double sum = 0.0;
  for (double w : raw) {
    if (w < 0.0) throw ValidationError("kernel weight is negative: " + std::to_string(w));
    sum += w;
  }
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    throw ValidationError("kernel weights have no positive mass");
  }
  for (double& w : raw) w /= sum;
  return Kernel(height, width, std::move(raw));
}

Kernel Kernel::normalized(const Image& raw) {
  return normalized(raw.height(), raw.width(), {raw.pixels().begin(), raw.pixels().end()});
}

}  // namespace regionsel
