#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "regionsel/image.hpp"

namespace regionsel {

// Coarse-to-fine alternating blind kernel estimator: shock-filter edge
// prediction, closed-form gradient-domain kernel solve, Tikhonov latent solve.
struct EstimatorConfig {
  int kernel_size = 31;
  double pyramid_ratio = 0.70710678118654752;
  int iterations_per_level = 5;
  double kernel_reg = 5.0;     // beta
  double latent_reg = 2e-3;    // alpha
  double gradient_keep_ratio = 0.10;
  int shock_iterations = 2;
  double presmooth_sigma = 1.0;

  void validate() const;
  nlohmann::json to_json() const;
  static EstimatorConfig from_json(const nlohmann::json& j);
};

struct PyramidLevel {
  Image image;
  int kernel_size;
};

// Levels ordered coarse to fine; the last level is the input image.
struct Pyramid {
  std::vector<PyramidLevel> levels;
};

struct GradientPair {
  Image dx;
  Image dy;
};

enum class EstimateStatus { Ok, Degenerate };

struct KernelEstimate {
  Kernel kernel;
  EstimateStatus status = EstimateStatus::Ok;
  std::string message;

  bool ok() const { return status == EstimateStatus::Ok; }
};

// Number of levels n is the smallest with kernel_size * ratio^(n-1) <= 5;
// level l uses the nearest odd size >= 3 to kernel_size * ratio^(n-1-l).
std::vector<int> pyramid_kernel_sizes(int kernel_size, double ratio);
Pyramid build_pyramid(const Image& blurred, const EstimatorConfig& cfg);

// Forward differences; the last column of dx and last row of dy are zero.
GradientPair image_gradients(const Image& img);

// Gaussian presmoothing, shock filtering, forward-difference gradients, then
// every gradient below the top `gradient_keep_ratio` magnitude quantile is
// zeroed.
GradientPair predict_gradients(const Image& latent, const EstimatorConfig& cfg);

// argmin_k sum_c |S_c * k - B_c|^2 + beta |k|^2 over the periodic domain,
// cropped to size x size and projected onto valid kernels (negatives and
// entries under max/20 dropped, unit sum). Throws DegenerateInputError when
// the latent gradients carry no energy.
Kernel solve_kernel(const GradientPair& latent, const GradientPair& blurred, int size, double beta);

// Projection used after every kernel update.
Kernel project_kernel(const Image& raw);

// argmin_L |k * L - B|^2 + alpha |grad L|^2, solved in the Fourier domain on
// an edge-tapered extension of `blurred`.
Image solve_latent(const Image& blurred, const Kernel& k, double alpha);

// Integer shift of the kernel mass so its centroid lands on the center tap
// (mass pushed outside the frame is dropped, then renormalized).
Kernel center_kernel(const Kernel& k);

KernelEstimate estimate_kernel(const Image& blurred, const EstimatorConfig& cfg);

// Interface shared by the built-in estimator and external-process adapters.
class KernelEstimator {
 public:
  virtual ~KernelEstimator() = default;
  virtual KernelEstimate estimate(const Image& blurred, int kernel_size) const = 0;
};

class BuiltinEstimator final : public KernelEstimator {
 public:
  explicit BuiltinEstimator(EstimatorConfig cfg) : cfg_(cfg) {}
  KernelEstimate estimate(const Image& blurred, int kernel_size) const override;
  const EstimatorConfig& config() const { return cfg_; }

 private:
  EstimatorConfig cfg_;
};

}  // namespace regionsel
