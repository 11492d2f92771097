#include "regionsel/kernelsim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "regionsel/error.hpp"

namespace regionsel {

void LabelConfig::validate() const {
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw ValidationError("lambda must lie in (0,1), got " + std::to_string(lambda));
  }
}

namespace {

double squared_norm(const Image& a) {
  double s = 0.0;
  for (double v : a.pixels()) {
    if (v < 0.0) throw ValidationError("kernel similarity needs non-negative weights");
    s += v * v;
  }
  if (!(s > 0.0)) throw ValidationError("kernel similarity of an all-zero kernel is undefined");
  return s;
}

}  // namespace

double kernel_similarity(const Image& a, const Image& b) {
  const double norm = std::sqrt(squared_norm(a) * squared_norm(b));

  // Shift (dy, dx) pairs a(r, c) with b(r - dy, c - dx). The overlap is
  // walked in row-major order of a, which is also row-major order of b, so
  // swapping the arguments sums the same products in the same order.
  double best = 0.0;
  for (int dy = -(b.height() - 1); dy <= a.height() - 1; ++dy) {
    const int r0 = std::max(0, dy);
    const int r1 = std::min(a.height(), b.height() + dy);
    for (int dx = -(b.width() - 1); dx <= a.width() - 1; ++dx) {
      const int c0 = std::max(0, dx);
      const int c1 = std::min(a.width(), b.width() + dx);
      double dot = 0.0;
      for (int r = r0; r < r1; ++r) {
        for (int c = c0; c < c1; ++c) dot += a(r, c) * b(r - dy, c - dx);
      }
      best = std::max(best, dot);
    }
  }
  return std::clamp(best / norm, 0.0, 1.0);
}

double kernel_similarity(const Kernel& estimated, const Kernel& truth) {
  return kernel_similarity(estimated.as_image(), truth.as_image());
}

int label(double similarity, const LabelConfig& cfg) { return similarity >= cfg.lambda ? 1 : 0; }

}  // namespace regionsel
