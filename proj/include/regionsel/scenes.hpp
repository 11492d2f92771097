#pragma once

#include <array>
#include <cstdint>

#include "regionsel/image.hpp"

namespace regionsel {

// Camera-shake style kernel: a smooth random-walk trajectory rasterized with
// bilinear splatting into a side x side grid, centroid at the grid center.
Kernel random_motion_kernel(int side, std::uint64_t seed);

// Piecewise-constant scene of overlapping rotated rectangles, ellipses and
// triangles over a shaded background. Rich in step edges of all
// orientations.
Image shapes_scene(int height, int width, std::uint64_t seed, int shape_count = 40);

enum class Region { Shapes, Bars, Speckle, Flat };

// Quadrants (top-left, top-right, bottom-left, bottom-right) filled with the
// given content over a shaded background.
Image quadrant_scene(int height, int width, std::uint64_t seed, const std::array<Region, 4>& layout);

// Scene with spatially varying usefulness for kernel estimation: one quadrant
// each of shapes, parallel bars, fine speckle and smoothly shaded flat
// background, in random placement.
Image mixed_scene(int height, int width, std::uint64_t seed);

}  // namespace regionsel
