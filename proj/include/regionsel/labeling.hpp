#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "regionsel/estimator.hpp"
#include "regionsel/kernelsim.hpp"
#include "regionsel/synthesis.hpp"
#include "regionsel/train.hpp"

namespace regionsel {

enum class SampleStatus { Ok, Degenerate, Failed };

std::string to_string(SampleStatus s);
SampleStatus sample_status_from_string(const std::string& s);

struct LabeledSample {
  std::size_t entry = 0;      // index into the manifest entries
  std::string blurred_path;   // as listed in the manifest
  PatchRef ref;
  double similarity = 0.0;
  int label = 0;
  SampleStatus status = SampleStatus::Ok;
  Kernel estimated = Kernel::delta();
  std::string estimated_kernel_path;  // set once saved
  std::string patch_path;             // set when patches are stored
};

struct LabeledDataset {
  std::vector<LabeledSample> samples;
  double lambda = 0.75;
  PatchGridSpec grid;
  EstimatorConfig estimator;
  std::string estimator_hash;
  bool patches_stored = false;
  std::filesystem::path manifest_path;  // absolute or relative to the dataset directory
};

struct LabelingOptions {
  // Run the estimator with each image's true kernel size instead of
  // EstimatorConfig::kernel_size.
  bool use_true_kernel_size = true;
};

// CRC-32 (hex) of the estimator configuration's canonical JSON.
std::string estimator_config_hash(const EstimatorConfig& cfg);

// One sample per (manifest entry, grid patch) in that order. An estimator
// that reports a degenerate input or throws yields similarity 0 and label 0.
LabeledDataset build_dataset(const CorpusManifest& manifest, const PatchGridSpec& spec, const EstimatorConfig& est,
                             const LabelConfig& label_cfg, const LabelingOptions& opts = {});

// Re-thresholds every stored similarity.
void relabel(LabeledDataset& ds, const LabelConfig& label_cfg);

// Threshold splitting the similarities as close to 1:1 as the values allow
// under the inclusive rule (the upper median).
double balancing_lambda(std::vector<double> similarities);

struct BalanceReport {
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t degenerate = 0;
  double positive_fraction = 0.0;
  bool imbalanced = false;  // fraction outside [0.3, 0.7]
};

// Emits a warning when the dataset is imbalanced.
BalanceReport class_balance_report(const LabeledDataset& ds);

inline constexpr const char* kDatasetFileName = "dataset.json";

// Writes dir/dataset.json plus one estimated-kernel text file per sample and,
// when store_patches is set, one PFM per patch.
void save_dataset(LabeledDataset& ds, const CorpusManifest& manifest, const std::filesystem::path& dir,
                  bool store_patches);
LabeledDataset load_dataset(const std::filesystem::path& index_path);

// Patches and labels ready for training. Patch refs are resolved through the
// manifest recorded in the index.
std::vector<TrainingSample> load_training_samples(const std::filesystem::path& index_path);
std::vector<TrainingSample> training_samples(const LabeledDataset& ds, const CorpusManifest& manifest);

}  // namespace regionsel
