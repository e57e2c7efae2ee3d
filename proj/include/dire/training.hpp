#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dire/checkpoint.hpp"
#include "dire/dropout.hpp"
#include "dire/models.hpp"

namespace dire {

struct TrainConfig {
  double learning_rate = 0.09;
  std::size_t minibatch = 10;
  double dropout = 0.5;
  std::size_t max_epochs = 150;
  std::uint64_t seed = 1;
  std::size_t patience = 0;  // 0 runs every epoch
  // Worker threads for minibatch members. Gradients are always reduced in
  // datapoint order, so results do not depend on this.
  std::size_t threads = 1;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean over the epoch
  double val_accuracy = 0.0;
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 0 means the initial parameters
  double best_val_accuracy = 0.0;
};

struct TrainResult {
  Checkpoint best;
  Checkpoint last;
  TrainLog log;
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::size_t epoch, std::size_t minibatch);
  std::size_t epoch;
  std::size_t minibatch;
};

// params -= lr · grads
void sgd_step(ParamSet& params, const ParamSet& grads, double lr);

double accuracy(const Model& model, std::span<const Datapoint> data);

using EpochCallback = std::function<void(const EpochRecord&)>;

// Plain minibatch SGD on the mean cross-entropy of each minibatch, with
// dropout during training and model selection on validation accuracy
// (ties keep the earlier epoch).
TrainResult train(const Model& initial, std::span<const Datapoint> train_set,
                  std::span<const Datapoint> val_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

// CSV with header epoch,train_loss,val_acc,seconds. When with_seconds is
// false the timing column holds NA, which keeps the file reproducible.
void write_train_log_csv(const std::filesystem::path& path, const TrainLog& log,
                         bool with_seconds);

struct GradCheckConfig {
  std::size_t trials = 20;
  double tolerance = 1e-4;
  double step = 1e-5;
  ModelDims dims{4, 4, 4, 8, 4, 300};
  std::size_t candidates = 3;
  std::size_t max_coords_per_block = 40;
  std::uint64_t seed = 7;
};

struct BlockCheck {
  std::string name;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t checked = 0;
};

struct GradCheckReport {
  std::string model;
  std::size_t trials = 0;
  std::vector<BlockCheck> blocks;
  double max_rel_error = 0.0;
  bool passed = false;
};

// |a - n| / max(|a|, |n|, floor); the floor keeps vanishing gradients from
// dividing round-off by round-off.
inline constexpr double kRelErrorFloor = 1e-6;
double relative_error(double analytic, double numeric);

// A random datapoint of arbitrary size for gradient and oracle checks:
// unit-norm Gaussian vectors like the generated data, random gold.
Datapoint random_datapoint(const ModelDims& dims, std::size_t candidates, Rng& rng);

// Compares the analytic gradient with central differences on fresh random
// parameters and datapoints, with dropout off. Blocks larger than
// max_coords_per_block are checked on a random coordinate sample.
GradCheckReport grad_check(const ModelSpec& spec, const GradCheckConfig& cfg);

// Same comparison for one fixed (model, datapoint) pair; merges into report.
void grad_check_instance(const Model& model, const Datapoint& dp, const GradCheckConfig& cfg,
                         Rng& rng, GradCheckReport& report);

}  // namespace dire
