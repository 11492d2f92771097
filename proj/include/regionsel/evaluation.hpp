#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "regionsel/estimator.hpp"
#include "regionsel/network.hpp"
#include "regionsel/synthesis.hpp"

namespace regionsel {

// Sum of squared differences |I_e - I_g|^2 / |I_kg - I_g|^2 over the interior
// left after removing `margin` pixels from every border.
double error_ratio(const Image& estimated, const Image& truth, const Image& with_true_kernel, int margin);

// 10 log10(1 / MSE) for peak 1.0; +infinity for identical images.
double psnr(const Image& a, const Image& b);

enum class Method { Top, Random, Whole, Center, GroundTruth };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct EvalRecord {
  std::string image_id;
  Method method = Method::Top;
  double er = 0.0;
  double psnr_db = 0.0;
  double similarity = 0.0;
  int patch_row = -1;  // -1 when the whole image was used
  int patch_col = -1;
  std::string status = "ok";
};

struct SuccessCurve {
  std::vector<double> thresholds;
  std::vector<double> rates;
};

// 1.0, 1.1, ..., 5.0.
std::vector<double> default_thresholds();

// rate(t) = fraction of records with ER <= t. Records with a non-finite ER
// count as failures at every threshold.
SuccessCurve success_curve(const std::vector<EvalRecord>& records, const std::vector<double>& thresholds);

struct EvalConfig {
  std::vector<Method> methods{Method::Top, Method::Random, Method::Whole, Method::Center};
  PatchGridSpec grid;
  // Non-blind deconvolution weight shared by every reconstruction.
  double alpha = 2e-3;
  // Border crop; negative means half the true kernel size.
  int margin = -1;
  std::uint64_t seed = 0;  // random-patch baseline
  bool use_true_kernel_size = true;
};

struct EvalReport {
  std::vector<EvalRecord> records;  // image-major, methods in config order
  std::vector<std::string> failures;
};

// `model` may be null when no method needs it.
EvalReport evaluate_pipeline(const CorpusManifest& manifest, const Network* model, const EstimatorConfig& est,
                             const EvalConfig& cfg);

void write_eval_csv(const std::vector<EvalRecord>& records, const std::filesystem::path& path);
// One polyline per method present in `records`, with the plotted values
// repeated in a <metadata> table.
void write_success_svg(const std::vector<EvalRecord>& records, const std::vector<double>& thresholds,
                       const std::filesystem::path& path);

}  // namespace regionsel
