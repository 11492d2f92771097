#include "regionsel/scenes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "regionsel/error.hpp"
#include "regionsel/synthesis.hpp"

namespace regionsel {

namespace {

struct Box {
  int row0, col0, rows, cols;
};

// Paints `value` into `img` wherever `inside(x, y)` holds, anti-aliased with
// a 3x3 supersampling grid and restricted to `clip`.
template <typename Inside>
void paint(Image& img, const Box& clip, double value, double min_x, double max_x, double min_y,
           double max_y, const Inside& inside) {
  const int r0 = std::max(clip.row0, static_cast<int>(std::floor(min_y)));
  const int r1 = std::min(clip.row0 + clip.rows - 1, static_cast<int>(std::ceil(max_y)));
  const int c0 = std::max(clip.col0, static_cast<int>(std::floor(min_x)));
  const int c1 = std::min(clip.col0 + clip.cols - 1, static_cast<int>(std::ceil(max_x)));
  constexpr std::array<double, 3> kSub{-1.0 / 3.0, 0.0, 1.0 / 3.0};
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      int hits = 0;
      for (double sy : kSub) {
        for (double sx : kSub) hits += inside(c + sx, r + sy) ? 1 : 0;
      }
      if (hits == 0) continue;
      const double cover = hits / 9.0;
      img(r, c) = (1.0 - cover) * img(r, c) + cover * value;
    }
  }
}

void paint_shapes(Image& img, const Box& box, std::mt19937_64& rng, int count) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double extent = std::min(box.rows, box.cols);
  const double min_half = 3.0;
  const double max_half = std::max(min_half + 1.0, 0.22 * extent);
  for (int s = 0; s < count; ++s) {
    const int kind = static_cast<int>(unit(rng) * 3.0) % 3;
    const double cx = box.col0 + unit(rng) * box.cols;
    const double cy = box.row0 + unit(rng) * box.rows;
    const double a = min_half + unit(rng) * (max_half - min_half);
    const double b = min_half + unit(rng) * (max_half - min_half);
    const double theta = unit(rng) * std::numbers::pi;
    const double value = unit(rng);
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    const double reach = std::hypot(a, b);
    if (kind == 0) {
      paint(img, box, value, cx - reach, cx + reach, cy - reach, cy + reach, [&](double x, double y) {
        const double u = (x - cx) * ct + (y - cy) * st;
        const double v = -(x - cx) * st + (y - cy) * ct;
        return std::abs(u) <= a && std::abs(v) <= b;
      });
    } else if (kind == 1) {
      paint(img, box, value, cx - reach, cx + reach, cy - reach, cy + reach, [&](double x, double y) {
        const double u = ((x - cx) * ct + (y - cy) * st) / a;
        const double v = (-(x - cx) * st + (y - cy) * ct) / b;
        return u * u + v * v <= 1.0;
      });
    } else {
      std::array<double, 6> p{};
      for (int i = 0; i < 3; ++i) {
        p[2 * i] = cx + (unit(rng) * 2.0 - 1.0) * reach;
        p[2 * i + 1] = cy + (unit(rng) * 2.0 - 1.0) * reach;
      }
      auto edge = [](double x0, double y0, double x1, double y1, double x, double y) {
        return (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0);
      };
      paint(img, box, value, cx - reach, cx + reach, cy - reach, cy + reach, [&](double x, double y) {
        const double e0 = edge(p[0], p[1], p[2], p[3], x, y);
        const double e1 = edge(p[2], p[3], p[4], p[5], x, y);
        const double e2 = edge(p[4], p[5], p[0], p[1], x, y);
        return (e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0);
      });
    }
  }
}

void shade_background(Image& img, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double base = 0.3 + 0.4 * unit(rng);
  const double gy = (unit(rng) - 0.5) * 0.2;
  const double gx = (unit(rng) - 0.5) * 0.2;
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) {
      img(r, c) = base + gy * r / img.height() + gx * c / img.width();
    }
  }
}

void paint_bars(Image& img, const Box& box, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double theta = unit(rng) * std::numbers::pi;
  const double period = 8.0 + 6.0 * unit(rng);
  const double duty = 0.4 + 0.2 * unit(rng);
  const double low = 0.15 + 0.2 * unit(rng);
  const double high = 0.65 + 0.2 * unit(rng);
  const double ct = std::cos(theta);
  const double st = std::sin(theta);
  for (int r = box.row0; r < box.row0 + box.rows; ++r) {
    for (int c = box.col0; c < box.col0 + box.cols; ++c) {
      int hits = 0;
      for (double sy : {-1.0 / 3.0, 0.0, 1.0 / 3.0}) {
        for (double sx : {-1.0 / 3.0, 0.0, 1.0 / 3.0}) {
          const double u = (c + sx) * ct + (r + sy) * st;
          const double phase = u / period - std::floor(u / period);
          hits += phase < duty ? 1 : 0;
        }
      }
      const double cover = hits / 9.0;
      img(r, c) = low + cover * (high - low);
    }
  }
}

// Dense high-contrast speckle of 1-3 pixel squares: detail finer than
// typical blur kernels.
void paint_speckle(Image& img, const Box& box, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double low = 0.1 + 0.2 * unit(rng);
  const double high = 0.7 + 0.2 * unit(rng);
  for (int r = box.row0; r < box.row0 + box.rows; ++r) {
    for (int c = box.col0; c < box.col0 + box.cols; ++c) img(r, c) = low;
  }
  const int count = box.rows * box.cols / 6;
  for (int i = 0; i < count; ++i) {
    const int side = 1 + static_cast<int>(unit(rng) * 3.0);
    const int r0 = box.row0 + static_cast<int>(unit(rng) * (box.rows - side + 1));
    const int c0 = box.col0 + static_cast<int>(unit(rng) * (box.cols - side + 1));
    for (int r = r0; r < r0 + side; ++r) {
      for (int c = c0; c < c0 + side; ++c) img(r, c) = high;
    }
  }
}

}  // namespace

Kernel random_motion_kernel(int side, std::uint64_t seed) {
  if (side < 3 || side % 2 == 0) {
    throw ValidationError("motion kernel side must be odd and >= 3, got " + std::to_string(side));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Trajectory: unit steps with a slowly drifting heading, sampled finely.
  constexpr int kSteps = 48;
  constexpr int kSubsteps = 8;
  std::vector<double> xs;
  std::vector<double> ys;
  double x = 0.0;
  double y = 0.0;
  double heading = unit(rng) * 2.0 * std::numbers::pi;
  double turn = 0.0;
  for (int s = 0; s < kSteps; ++s) {
    turn = 0.7 * turn + 0.25 * gauss(rng);
    heading += turn;
    for (int k = 0; k < kSubsteps; ++k) {
      x += std::cos(heading) / kSubsteps;
      y += std::sin(heading) / kSubsteps;
      xs.push_back(x);
      ys.push_back(y);
    }
  }
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(ys.size());
  double reach = 1e-9;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    reach = std::max({reach, std::abs(xs[i] - mx), std::abs(ys[i] - my)});
  }
  const double half = side / 2;
  const double fill = 0.6 + 0.4 * unit(rng);
  const double scale = (half - 0.5) * fill / reach;

  Image raw(side, side, 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double px = half + (xs[i] - mx) * scale;
    const double py = half + (ys[i] - my) * scale;
    const int x0 = static_cast<int>(std::floor(px));
    const int y0 = static_cast<int>(std::floor(py));
    const double fx = px - x0;
    const double fy = py - y0;
    raw(y0, x0) += (1 - fx) * (1 - fy);
    raw(y0, x0 + 1) += fx * (1 - fy);
    raw(y0 + 1, x0) += (1 - fx) * fy;
    raw(y0 + 1, x0 + 1) += fx * fy;
  }
  return Kernel::normalized(raw);
}

Image shapes_scene(int height, int width, std::uint64_t seed, int shape_count) {
  Image img(height, width, 0.0);
  std::mt19937_64 rng(seed);
  shade_background(img, rng);
  paint_shapes(img, {0, 0, height, width}, rng, shape_count);
  for (double& v : img.pixels()) v = std::clamp(v, 0.0, 1.0);
  return img;
}

Image quadrant_scene(int height, int width, std::uint64_t seed, const std::array<Region, 4>& layout) {
  Image img(height, width, 0.0);
  std::mt19937_64 rng(seed);
  shade_background(img, rng);
  const int hh = height / 2;
  const int hw = width / 2;
  const std::array<Box, 4> quadrants{Box{0, 0, hh, hw}, Box{0, hw, hh, width - hw}, Box{hh, 0, height - hh, hw},
                                     Box{hh, hw, height - hh, width - hw}};
  for (std::size_t q = 0; q < 4; ++q) {
    const Box& box = quadrants[q];
    switch (layout[q]) {
      case Region::Shapes:
        paint_shapes(img, box, rng, std::max(8, box.rows * box.cols / 250));
        break;
      case Region::Bars:
        paint_bars(img, box, rng);
        break;
      case Region::Speckle:
        paint_speckle(img, box, rng);
        break;
      case Region::Flat:
        break;
    }
  }
  for (double& v : img.pixels()) v = std::clamp(v, 0.0, 1.0);
  return img;
}

Image mixed_scene(int height, int width, std::uint64_t seed) {
  std::array<Region, 4> layout{Region::Shapes, Region::Bars, Region::Speckle, Region::Flat};
  std::mt19937_64 rng(splitmix64(seed));
  for (std::size_t i = layout.size(); i > 1; --i) std::swap(layout[i - 1], layout[rng() % i]);
  return quadrant_scene(height, width, seed, layout);
}

}  // namespace regionsel
