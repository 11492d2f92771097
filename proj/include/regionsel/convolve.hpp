#pragma once

#include "regionsel/image.hpp"

namespace regionsel {

enum class BoundaryMode {
  ReplicatePad,
  Periodic,
  // Each out-of-range gap (right edge -> wrapped left edge, and likewise
  // vertically) is filled with a raised-cosine blend from the near edge
  // value to the far edge value. The padded image is then smooth under
  // periodic wrap of its own size.
  EdgeTaper,
};

// Extends `img` by `pad_rows` above/below and `pad_cols` left/right.
Image pad(const Image& img, int pad_rows, int pad_cols, BoundaryMode mode);

// True convolution (kernel flipped), same-size output. Parallel over rows.
Image convolve_direct(const Image& img, const Kernel& k, BoundaryMode mode);

// Same result as convolve_direct computed through FFTs of the padded image.
Image convolve_fft(const Image& img, const Kernel& k, BoundaryMode mode);

// Picks the direct route for small kernels and the FFT route otherwise.
Image convolve(const Image& img, const Kernel& k, BoundaryMode mode);

// Bilinear resampling with corner-aligned sample grids. Output dims are
// round(dims * scale).
Image resample(const Image& img, double scale);
// Same, to explicit target dims.
Image resample_to(const Image& img, int height, int width);

// Separable Gaussian smoothing with replicate borders; sigma 0 is identity.
Image gaussian_blur(const Image& img, double sigma);

Image crop(const Image& img, int row0, int col0, int height, int width);

namespace reference {

// Single-threaded version of convolve_direct kept for tests and benchmarks.
Image convolve_direct(const Image& img, const Kernel& k, BoundaryMode mode);

}  // namespace reference

}  // namespace regionsel
