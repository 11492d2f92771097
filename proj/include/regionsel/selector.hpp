#pragma once

#include <vector>

#include "regionsel/estimator.hpp"
#include "regionsel/network.hpp"
#include "regionsel/synthesis.hpp"

namespace regionsel {

struct RankedPatch {
  PatchRef ref;
  double score = 0.5;  // classifier probability
  double logit = 0.0;
};

// Every grid patch scored by the classifier, highest first. Ordering uses the
// logit (so saturated probabilities still rank), ties by (row0, col0).
std::vector<RankedPatch> score_patches(const Image& img, const Network& net, const PatchGridSpec& spec);

std::vector<RankedPatch> select_top(const std::vector<RankedPatch>& ranked, int k);

struct Selection {
  RankedPatch patch;
  KernelEstimate estimate;
};

// Kernel estimated from the single best-ranked patch.
Selection select_and_estimate(const Image& img, const Network& net, const PatchGridSpec& spec,
                              const KernelEstimator& estimator, int kernel_size);
Selection select_and_estimate(const Image& img, const Network& net, const PatchGridSpec& spec,
                              const EstimatorConfig& cfg);

// Copy of img with the patch outline drawn `border` pixels thick at 1.0.
Image annotate(const Image& img, const PatchRef& ref, int border = 3);

}  // namespace regionsel
