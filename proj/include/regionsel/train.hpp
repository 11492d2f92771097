#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "json.hpp"
#include "regionsel/image.hpp"
#include "regionsel/network.hpp"

namespace regionsel {

struct TrainConfig {
  double learning_rate = 0.001;
  double momentum = 0.9;
  int batch_size = 32;
  int epochs = 20;
  std::uint64_t seed = 0;
  int input_side = 228;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct TrainingSample {
  Image patch = Image(1, 1);
  int label = 0;
  double similarity = 0.0;
};

// Loss and accuracy over the whole training set, measured after each epoch's
// updates.
struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double accuracy = 0.0;
};

struct TrainResult {
  Network network;
  std::vector<EpochStats> log;
};

// Minibatch SGD with classical momentum on the logit-form BCE. Each epoch
// visits a seeded permutation of the samples and drops the incomplete tail
// batch.
TrainResult train(Network net, const std::vector<TrainingSample>& samples, const TrainConfig& cfg);

// Fraction of samples whose thresholded prediction (p >= 0.5) equals the label.
double accuracy(const Network& net, const std::vector<TrainingSample>& samples);

void write_training_log(const std::vector<EpochStats>& log, const std::filesystem::path& path);

}  // namespace regionsel
