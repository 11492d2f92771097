#include "regionsel/selector.hpp"

#include <algorithm>
#include <string>

#include "regionsel/error.hpp"
#include "regionsel/parallel.hpp"

namespace regionsel {

std::vector<RankedPatch> score_patches(const Image& img, const Network& net, const PatchGridSpec& spec) {
  if (spec.patch_size != net.input_side()) {
    throw DimensionError("patch size " + std::to_string(spec.patch_size) + " does not match network input " +
                         std::to_string(net.input_side()));
  }
  const auto grid = patch_grid(img, spec);
  std::vector<RankedPatch> ranked(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    const double z = logit(net, extract(img, grid[i]));
    ranked[i] = {grid[i], sigmoid(z), z};
  });
  std::stable_sort(ranked.begin(), ranked.end(), [](const RankedPatch& a, const RankedPatch& b) {
    if (a.logit != b.logit) return a.logit > b.logit;
    if (a.ref.row0 != b.ref.row0) return a.ref.row0 < b.ref.row0;
    return a.ref.col0 < b.ref.col0;
  });
  return ranked;
}

std::vector<RankedPatch> select_top(const std::vector<RankedPatch>& ranked, int k) {
  if (ranked.empty()) throw ValidationError("select_top: no ranked patches");
  if (k < 1) throw ValidationError("select_top: k must be >= 1");
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(k), ranked.size());
  return {ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(n)};
}

Selection select_and_estimate(const Image& img, const Network& net, const PatchGridSpec& spec,
                              const KernelEstimator& estimator, int kernel_size) {
  if (3 * kernel_size > spec.patch_size) {
    throw ValidationError("patch size " + std::to_string(spec.patch_size) + " is too small for kernel size " +
                          std::to_string(kernel_size));
  }
  const RankedPatch best = select_top(score_patches(img, net, spec), 1).front();
  return {best, estimator.estimate(extract(img, best.ref), kernel_size)};
}

Selection select_and_estimate(const Image& img, const Network& net, const PatchGridSpec& spec,
                              const EstimatorConfig& cfg) {
  return select_and_estimate(img, net, spec, BuiltinEstimator(cfg), cfg.kernel_size);
}

Image annotate(const Image& img, const PatchRef& ref, int border) {
  if (border < 1) throw ValidationError("annotation border must be >= 1");
  Image out = img;
  const int r1 = ref.row0 + ref.size;
  const int c1 = ref.col0 + ref.size;
  for (int r = std::max(0, ref.row0); r < std::min(img.height(), r1); ++r) {
    for (int c = std::max(0, ref.col0); c < std::min(img.width(), c1); ++c) {
      const bool edge = r < ref.row0 + border || r >= r1 - border || c < ref.col0 + border || c >= c1 - border;
      if (edge) out(r, c) = 1.0;
    }
  }
  return out;
}

}  // namespace regionsel
