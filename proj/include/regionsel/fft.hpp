#pragma once

#include <complex>
#include <vector>

#include "regionsel/image.hpp"

namespace regionsel {

// Half-plane spectrum of a real height x width signal (FFTW r2c layout:
// height rows of width/2 + 1 bins).
struct Spectrum {
  int height = 0;
  int width = 0;
  std::vector<std::complex<double>> bins;

  int bins_per_row() const { return width / 2 + 1; }
  std::complex<double>& at(int row, int col) {
    return bins[static_cast<std::size_t>(row) * bins_per_row() + col];
  }
  const std::complex<double>& at(int row, int col) const {
    return bins[static_cast<std::size_t>(row) * bins_per_row() + col];
  }
};

Spectrum forward_fft(const Image& img);
// Normalized inverse (divides by height * width).
Image inverse_fft(const Spectrum& spectrum);

// Transfer function of `k` on a height x width periodic grid, with the
// kernel center moved to the origin.
Spectrum kernel_transfer(const Kernel& k, int height, int width);

// |F(dx)|^2 + |F(dy)|^2 for forward-difference filters at bin (row, col).
double gradient_transfer_energy(int row, int col, int height, int width);

}  // namespace regionsel
