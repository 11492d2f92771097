#include "regionsel/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "regionsel/convolve.hpp"
#include "regionsel/error.hpp"
#include "regionsel/fft.hpp"

namespace regionsel {

void EstimatorConfig::validate() const {
  if (kernel_size < 3 || kernel_size % 2 == 0) {
    throw ValidationError("kernel_size must be odd and >= 3, got " + std::to_string(kernel_size));
  }
  if (!(pyramid_ratio > 0.0 && pyramid_ratio < 1.0)) throw ValidationError("pyramid_ratio must lie in (0,1)");
  if (iterations_per_level < 1) throw ValidationError("iterations_per_level must be >= 1");
  if (!(kernel_reg > 0.0)) throw ValidationError("kernel_reg must be > 0");
  if (!(latent_reg > 0.0)) throw ValidationError("latent_reg must be > 0");
  if (!(gradient_keep_ratio > 0.0 && gradient_keep_ratio <= 1.0)) {
    throw ValidationError("gradient_keep_ratio must lie in (0,1]");
  }
  if (shock_iterations < 0) throw ValidationError("shock_iterations must be >= 0");
  if (presmooth_sigma < 0.0) throw ValidationError("presmooth_sigma must be >= 0");
}

nlohmann::json EstimatorConfig::to_json() const {
  return {{"kernel_size", kernel_size},
          {"pyramid_ratio", pyramid_ratio},
          {"iterations_per_level", iterations_per_level},
          {"kernel_reg", kernel_reg},
          {"latent_reg", latent_reg},
          {"gradient_keep_ratio", gradient_keep_ratio},
          {"shock_iterations", shock_iterations},
          {"presmooth_sigma", presmooth_sigma}};
}

EstimatorConfig EstimatorConfig::from_json(const nlohmann::json& j) {
  EstimatorConfig c;
  c.kernel_size = j.value("kernel_size", c.kernel_size);
  c.pyramid_ratio = j.value("pyramid_ratio", c.pyramid_ratio);
  c.iterations_per_level = j.value("iterations_per_level", c.iterations_per_level);
  c.kernel_reg = j.value("kernel_reg", c.kernel_reg);
  c.latent_reg = j.value("latent_reg", c.latent_reg);
  c.gradient_keep_ratio = j.value("gradient_keep_ratio", c.gradient_keep_ratio);
  c.shock_iterations = j.value("shock_iterations", c.shock_iterations);
  c.presmooth_sigma = j.value("presmooth_sigma", c.presmooth_sigma);
  return c;
}

std::vector<int> pyramid_kernel_sizes(int kernel_size, double ratio) {
  int levels = 1;
  while (kernel_size * std::pow(ratio, levels - 1) > 5.0) ++levels;
  std::vector<int> sizes(levels);
  for (int l = 0; l < levels; ++l) {
    const double s = kernel_size * std::pow(ratio, levels - 1 - l);
    const int odd = 2 * static_cast<int>(std::lround((s - 1.0) / 2.0)) + 1;
    sizes[l] = std::max(3, odd);
  }
  sizes.back() = kernel_size;
  return sizes;
}

Pyramid build_pyramid(const Image& blurred, const EstimatorConfig& cfg) {
  cfg.validate();
  if (3 * cfg.kernel_size > std::min(blurred.height(), blurred.width())) {
    throw DimensionError("image " + std::to_string(blurred.height()) + "x" +
                         std::to_string(blurred.width()) + " is too small for kernel size " +
                         std::to_string(cfg.kernel_size) + " (needs 3x)");
  }
  const auto sizes = pyramid_kernel_sizes(cfg.kernel_size, cfg.pyramid_ratio);
  const int n = static_cast<int>(sizes.size());
  Pyramid pyr;
  for (int l = 0; l < n; ++l) {
    if (l == n - 1) {
      pyr.levels.push_back({blurred, sizes[l]});
      continue;
    }
    const double scale = std::pow(cfg.pyramid_ratio, n - 1 - l);
    const double antialias = 0.5 * std::sqrt(1.0 / (scale * scale) - 1.0);
    const int h = std::max(1, static_cast<int>(std::lround(blurred.height() * scale)));
    const int w = std::max(1, static_cast<int>(std::lround(blurred.width() * scale)));
    pyr.levels.push_back({resample_to(gaussian_blur(blurred, antialias), h, w), sizes[l]});
  }
  return pyr;
}

GradientPair image_gradients(const Image& img) {
  const int h = img.height();
  const int w = img.width();
  Image dx(h, w, 0.0);
  Image dy(h, w, 0.0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (c + 1 < w) dx(r, c) = img(r, c + 1) - img(r, c);
      if (r + 1 < h) dy(r, c) = img(r + 1, c) - img(r, c);
    }
  }
  return {std::move(dx), std::move(dy)};
}

namespace {

Image shock_filter(Image img, int iterations) {
  constexpr double kDt = 0.5;
  const int h = img.height();
  const int w = img.width();
  for (int it = 0; it < iterations; ++it) {
    Image next = img;
    for (int r = 0; r < h; ++r) {
      const int up = std::max(r - 1, 0);
      const int down = std::min(r + 1, h - 1);
      for (int c = 0; c < w; ++c) {
        const int left = std::max(c - 1, 0);
        const int right = std::min(c + 1, w - 1);
        const double lap = img(up, c) + img(down, c) + img(r, left) + img(r, right) - 4.0 * img(r, c);
        const double gx = 0.5 * (img(r, right) - img(r, left));
        const double gy = 0.5 * (img(down, c) - img(up, c));
        const double sign = lap > 0.0 ? 1.0 : (lap < 0.0 ? -1.0 : 0.0);
        next(r, c) = img(r, c) - sign * std::sqrt(gx * gx + gy * gy) * kDt;
      }
    }
    img = std::move(next);
  }
  return img;
}

}  // namespace

GradientPair predict_gradients(const Image& latent, const EstimatorConfig& cfg) {
  Image sharp = shock_filter(gaussian_blur(latent, cfg.presmooth_sigma), cfg.shock_iterations);
  GradientPair g = image_gradients(sharp);

  const std::size_t n = g.dx.size();
  std::vector<double> magnitude(n);
  for (std::size_t i = 0; i < n; ++i) {
    magnitude[i] = std::hypot(g.dx.pixels()[i], g.dy.pixels()[i]);
  }
  const std::size_t keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(cfg.gradient_keep_ratio * static_cast<double>(n))));
  std::vector<double> sorted = magnitude;
  std::nth_element(sorted.begin(), sorted.begin() + (keep - 1), sorted.end(), std::greater<>());
  const double threshold = sorted[keep - 1];
  for (std::size_t i = 0; i < n; ++i) {
    if (magnitude[i] < threshold || magnitude[i] <= 0.0) {
      g.dx.pixels()[i] = 0.0;
      g.dy.pixels()[i] = 0.0;
    }
  }
  return g;
}

Kernel project_kernel(const Image& raw) {
  std::vector<double> w(raw.pixels().begin(), raw.pixels().end());
  double peak = 0.0;
  for (double& v : w) {
    v = std::max(v, 0.0);
    peak = std::max(peak, v);
  }
  if (!(peak > 0.0)) throw DegenerateInputError("kernel estimate has no positive mass");
  const double floor = peak / 20.0;
  for (double& v : w) {
    if (v < floor) v = 0.0;
  }
  return Kernel::normalized(raw.height(), raw.width(), std::move(w));
}

Kernel solve_kernel(const GradientPair& latent, const GradientPair& blurred, int size, double beta) {
  if (!latent.dx.same_shape(latent.dy) || !latent.dx.same_shape(blurred.dx) ||
      !latent.dx.same_shape(blurred.dy)) {
    throw DimensionError("solve_kernel: gradient maps differ in shape");
  }
  if (size < 1 || size % 2 == 0) throw ValidationError("solve_kernel: size must be odd");
  const int h = latent.dx.height();
  const int w = latent.dx.width();
  if (size > h || size > w) throw DimensionError("solve_kernel: kernel larger than gradient maps");
  if (!(beta > 0.0)) throw ValidationError("solve_kernel: beta must be > 0");

  double energy = 0.0;
  for (double v : latent.dx.pixels()) energy += v * v;
  for (double v : latent.dy.pixels()) energy += v * v;
  if (energy < 1e-20) throw DegenerateInputError("latent gradients are all zero");

  const Spectrum sx = forward_fft(latent.dx);
  const Spectrum sy = forward_fft(latent.dy);
  const Spectrum bx = forward_fft(blurred.dx);
  const Spectrum by = forward_fft(blurred.dy);
  Spectrum k{h, w, std::vector<std::complex<double>>(sx.bins.size())};
  for (std::size_t i = 0; i < k.bins.size(); ++i) {
    const auto num = std::conj(sx.bins[i]) * bx.bins[i] + std::conj(sy.bins[i]) * by.bins[i];
    const double den = std::norm(sx.bins[i]) + std::norm(sy.bins[i]) + beta;
    k.bins[i] = num / den;
  }
  const Image full = inverse_fft(k);

  const int half = size / 2;
  Image raw(size, size, 0.0);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      raw(r, c) = full(((r - half) % h + h) % h, ((c - half) % w + w) % w);
    }
  }
  return project_kernel(raw);
}

Image solve_latent(const Image& blurred, const Kernel& k, double alpha) {
  if (!(alpha > 0.0)) throw ValidationError("solve_latent: alpha must be > 0");
  const int pad_rows = k.height();
  const int pad_cols = k.width();
  const Image ext = pad(blurred, pad_rows, pad_cols, BoundaryMode::EdgeTaper);
  const int h = ext.height();
  const int w = ext.width();
  Spectrum data = forward_fft(ext);
  const Spectrum otf = kernel_transfer(k, h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < data.bins_per_row(); ++c) {
      const auto kf = otf.at(r, c);
      const double den = std::norm(kf) + alpha * gradient_transfer_energy(r, c, h, w);
      data.at(r, c) = std::conj(kf) * data.at(r, c) / den;
    }
  }
  return crop(inverse_fft(data), pad_rows, pad_cols, blurred.height(), blurred.width());
}

Kernel center_kernel(const Kernel& k) {
  double mass = 0.0;
  double my = 0.0;
  double mx = 0.0;
  for (int r = 0; r < k.height(); ++r) {
    for (int c = 0; c < k.width(); ++c) {
      mass += k(r, c);
      my += r * k(r, c);
      mx += c * k(r, c);
    }
  }
  const int sy = static_cast<int>(std::lround(k.half_height() - my / mass));
  const int sx = static_cast<int>(std::lround(k.half_width() - mx / mass));
  if (sy == 0 && sx == 0) return k;
  Image shifted(k.height(), k.width(), 0.0);
  for (int r = 0; r < k.height(); ++r) {
    for (int c = 0; c < k.width(); ++c) {
      const int nr = r + sy;
      const int nc = c + sx;
      if (nr >= 0 && nr < k.height() && nc >= 0 && nc < k.width()) shifted(nr, nc) = k(r, c);
    }
  }
  try {
    return Kernel::normalized(shifted);
  } catch (const ValidationError&) {
    return k;
  }
}

KernelEstimate estimate_kernel(const Image& blurred, const EstimatorConfig& cfg) {
  const Pyramid pyr = build_pyramid(blurred, cfg);
  Kernel kernel = Kernel::delta(pyr.levels.front().kernel_size);
  for (std::size_t l = 0; l < pyr.levels.size(); ++l) {
    const PyramidLevel& level = pyr.levels[l];
    try {
      Image latent = level.image;
      if (l > 0) {
        kernel = project_kernel(resample_to(kernel.as_image(), level.kernel_size, level.kernel_size));
        latent = solve_latent(level.image, kernel, cfg.latent_reg);
      }
      const GradientPair observed = image_gradients(level.image);
      for (int it = 0; it < cfg.iterations_per_level; ++it) {
        const GradientPair predicted = predict_gradients(latent, cfg);
        kernel = solve_kernel(predicted, observed, level.kernel_size, cfg.kernel_reg);
        latent = solve_latent(level.image, kernel, cfg.latent_reg);
      }
    } catch (const DegenerateInputError& e) {
      if (l == 0) return {Kernel::delta(cfg.kernel_size), EstimateStatus::Degenerate, e.what()};
      Kernel upsampled = project_kernel(resample_to(kernel.as_image(), cfg.kernel_size, cfg.kernel_size));
      return {center_kernel(upsampled), EstimateStatus::Degenerate, e.what()};
    }
  }
  return {center_kernel(kernel), EstimateStatus::Ok, {}};
}

KernelEstimate BuiltinEstimator::estimate(const Image& blurred, int kernel_size) const {
  EstimatorConfig cfg = cfg_;
  cfg.kernel_size = kernel_size;
  return estimate_kernel(blurred, cfg);
}

}  // namespace regionsel
