#pragma once

#include <filesystem>

#include "regionsel/image.hpp"

namespace regionsel {

// Reads binary PGM (P5, maxval <= 255), binary PPM (P6, converted to luma
// 0.299/0.587/0.114) or PFM ("Pf" grayscale / "PF" color, either byte
// order). 8-bit values map to v / maxval.
Image read_image(const std::filesystem::path& path);

// Format chosen by extension: ".pgm" writes P5 with values clamped to [0,1]
// and quantized round-half-up; ".pfm" writes little-endian 32-bit floats.
void write_image(const Image& img, const std::filesystem::path& path);

void write_pgm(const Image& img, const std::filesystem::path& path);
void write_pfm(const Image& img, const std::filesystem::path& path);

// Text format: "side_h side_w" then row-major weights. Reading validates the
// kernel invariants with a 1e-4 tolerance on the sum and does not normalize.
Kernel read_kernel(const std::filesystem::path& path);
void write_kernel(const Kernel& k, const std::filesystem::path& path);

}  // namespace regionsel
