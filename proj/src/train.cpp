#include "regionsel/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

#include "regionsel/error.hpp"
#include "regionsel/parallel.hpp"

namespace regionsel {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("learning_rate must be a finite non-negative number");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ValidationError("momentum must lie in [0, 1)");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (input_side < 1) throw ValidationError("input_side must be >= 1");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate}, {"momentum", momentum}, {"batch_size", batch_size},
          {"epochs", epochs},               {"seed", seed},         {"input_side", input_side}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.momentum = j.value("momentum", c.momentum);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.seed = j.value("seed", c.seed);
  c.input_side = j.value("input_side", c.input_side);
  c.validate();
  return c;
}

namespace {

struct Stats {
  double loss;
  double accuracy;
};

Stats evaluate(const Network& net, const std::vector<Tensor>& inputs, const std::vector<TrainingSample>& samples) {
  std::vector<double> logits(inputs.size());
  parallel_for(inputs.size(), [&](std::size_t i) { logits[i] = logit(net, inputs[i]); });
  std::vector<int> labels(samples.size());
  int correct = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    labels[i] = samples[i].label;
    correct += ((logits[i] >= 0.0 ? 1 : 0) == labels[i]) ? 1 : 0;
  }
  return {bce_loss_from_logits(logits, labels), static_cast<double>(correct) / static_cast<double>(samples.size())};
}

// Fisher-Yates driven directly by the engine output so the permutation does
// not depend on the standard library's distribution implementations.
void shuffle_indices(std::vector<std::size_t>& idx, std::mt19937_64& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace

TrainResult train(Network net, const std::vector<TrainingSample>& samples, const TrainConfig& cfg) {
  cfg.validate();
  if (samples.empty()) throw ValidationError("training set is empty");
  if (samples.size() < static_cast<std::size_t>(cfg.batch_size)) {
    throw ValidationError("training set has " + std::to_string(samples.size()) + " samples, fewer than batch_size " +
                          std::to_string(cfg.batch_size));
  }
  if (cfg.input_side != net.input_side()) {
    throw ValidationError("input_side " + std::to_string(cfg.input_side) + " differs from the network input " +
                          std::to_string(net.input_side()));
  }
  std::vector<Tensor> inputs(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].label != 0 && samples[i].label != 1) throw ValidationError("labels must be 0 or 1");
    inputs[i] = prepare_input(net, samples[i].patch);
  }

  ParamGrads velocity = zero_grads(net);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(samples.size());
  std::vector<EpochStats> log;
  const std::size_t batches = samples.size() / static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_indices(order, rng);
    for (std::size_t b = 0; b < batches; ++b) {
      std::vector<LabeledInput> batch;
      batch.reserve(cfg.batch_size);
      for (int k = 0; k < cfg.batch_size; ++k) {
        const std::size_t i = order[b * cfg.batch_size + k];
        batch.push_back({&inputs[i], samples[i].label});
      }
      const BatchGradient g = backward(net, batch);
      auto params = net.parameters();
      for (std::size_t blk = 0; blk < params.size(); ++blk) {
        for (std::size_t j = 0; j < params[blk].size(); ++j) {
          velocity[blk][j] = cfg.momentum * velocity[blk][j] - cfg.learning_rate * g.grads[blk][j];
          params[blk][j] += velocity[blk][j];
        }
      }
    }
    const Stats s = evaluate(net, inputs, samples);
    log.push_back({epoch, s.loss, s.accuracy});
  }
  return {std::move(net), std::move(log)};
}

double accuracy(const Network& net, const std::vector<TrainingSample>& samples) {
  if (samples.empty()) throw ValidationError("accuracy: no samples");
  std::vector<Tensor> inputs(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) inputs[i] = prepare_input(net, samples[i].patch);
  return evaluate(net, inputs, samples).accuracy;
}

void write_training_log(const std::vector<EpochStats>& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write training log " + path.string());
  out << "epoch,mean_loss,train_accuracy\n";
  char line[96];
  for (const auto& e : log) {
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g\n", e.epoch, e.mean_loss, e.accuracy);
    out << line;
  }
  if (!out) throw IoError("failed writing training log " + path.string());
}

}  // namespace regionsel
