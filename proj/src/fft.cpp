#include "regionsel/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>

#include "regionsel/error.hpp"

namespace regionsel {

namespace {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
FftwBuffer<T> fftw_alloc(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (!p) throw std::bad_alloc();
  return FftwBuffer<T>(p);
}

// FFTW execution is thread-safe, planning is not. Plans are created once per
// (height, width, direction) under a lock and then run through the new-array
// interface on fftw_malloc'd (hence identically aligned) buffers.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(int height, int width, bool forward) {
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(height, width, forward);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    const std::size_t n_real = static_cast<std::size_t>(height) * width;
    const std::size_t n_bins = static_cast<std::size_t>(height) * (width / 2 + 1);
    auto real = fftw_alloc<double>(n_real);
    auto cplx = fftw_alloc<fftw_complex>(n_bins);
    fftw_plan plan = forward
        ? fftw_plan_dft_r2c_2d(height, width, real.get(), cplx.get(), FFTW_ESTIMATE)
        : fftw_plan_dft_c2r_2d(height, width, cplx.get(), real.get(), FFTW_ESTIMATE);
    if (!plan) throw Error("FFTW failed to create a plan");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, bool>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

}  // namespace

Spectrum forward_fft(const Image& img) {
  const int h = img.height();
  const int w = img.width();
  fftw_plan plan = plan_cache().get(h, w, true);

  auto real = fftw_alloc<double>(img.size());
  std::memcpy(real.get(), img.pixels().data(), sizeof(double) * img.size());
  Spectrum out{h, w, {}};
  const std::size_t n_bins = static_cast<std::size_t>(h) * out.bins_per_row();
  auto cplx = fftw_alloc<fftw_complex>(n_bins);
  fftw_execute_dft_r2c(plan, real.get(), cplx.get());

  out.bins.resize(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i) out.bins[i] = {cplx[i][0], cplx[i][1]};
  return out;
}

Image inverse_fft(const Spectrum& spectrum) {
  const int h = spectrum.height;
  const int w = spectrum.width;
  fftw_plan plan = plan_cache().get(h, w, false);

  const std::size_t n_bins = spectrum.bins.size();
  auto cplx = fftw_alloc<fftw_complex>(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i) {
    cplx[i][0] = spectrum.bins[i].real();
    cplx[i][1] = spectrum.bins[i].imag();
  }
  const std::size_t n_real = static_cast<std::size_t>(h) * w;
  auto real = fftw_alloc<double>(n_real);
  fftw_execute_dft_c2r(plan, cplx.get(), real.get());

  const double scale = 1.0 / static_cast<double>(n_real);
  std::vector<double> pixels(n_real);
  for (std::size_t i = 0; i < n_real; ++i) pixels[i] = real[i] * scale;
  return Image(h, w, std::move(pixels));
}

Spectrum kernel_transfer(const Kernel& k, int height, int width) {
  if (k.height() > height || k.width() > width) {
    throw DimensionError("kernel " + std::to_string(k.height()) + "x" +
                         std::to_string(k.width()) + " does not fit a " +
                         std::to_string(height) + "x" + std::to_string(width) + " grid");
  }
  Image padded(height, width, 0.0);
  const int ch = k.half_height();
  const int cw = k.half_width();
  for (int r = 0; r < k.height(); ++r) {
    for (int c = 0; c < k.width(); ++c) {
      const int pr = ((r - ch) % height + height) % height;
      const int pc = ((c - cw) % width + width) % width;
      padded(pr, pc) += k(r, c);
    }
  }
  return forward_fft(padded);
}

double gradient_transfer_energy(int row, int col, int height, int width) {
  const double sy = std::sin(std::numbers::pi * row / height);
  const double sx = std::sin(std::numbers::pi * col / width);
  return 4.0 * (sx * sx + sy * sy);
}

}  // namespace regionsel
