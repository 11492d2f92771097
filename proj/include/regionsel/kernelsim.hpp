#pragma once

#include "regionsel/image.hpp"

namespace regionsel {

struct LabelConfig {
  double lambda = 0.75;

  void validate() const;
};

// Maximum normalized cross-correlation over every integer shift with
// overlapping support:
//
//   S = max_g sum_t a(t) b(t + g) / (|a|_2 |b|_2)
//
// Sizes may differ. The result lies in [0,1], is exactly symmetric and exactly
// invariant to translating either kernel inside its frame.
double kernel_similarity(const Kernel& estimated, const Kernel& truth);

// Same measure on raw non-negative weights (need not sum to one). Throws
// ValidationError for negative or all-zero weights.
double kernel_similarity(const Image& a, const Image& b);

// 1 when similarity >= lambda, else 0.
int label(double similarity, const LabelConfig& cfg);

}  // namespace regionsel
