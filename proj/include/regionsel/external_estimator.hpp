#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "regionsel/estimator.hpp"

namespace regionsel {

// Runs `program args... <blurred.pfm> <kernel_size> <out.txt>` and reads the
// kernel text file it writes. A nonzero exit, a missing or malformed output,
// or exceeding `timeout` raises EstimatorError.
class ExternalEstimator final : public KernelEstimator {
 public:
  ExternalEstimator(std::vector<std::string> command, std::chrono::milliseconds timeout,
                    std::filesystem::path scratch_dir = std::filesystem::temp_directory_path());
  KernelEstimate estimate(const Image& blurred, int kernel_size) const override;

 private:
  std::vector<std::string> command_;
  std::chrono::milliseconds timeout_;
  std::filesystem::path scratch_;
};

}  // namespace regionsel
