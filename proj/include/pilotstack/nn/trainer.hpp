#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <vector>

#include "pilotstack/dataset.hpp"
#include "pilotstack/nn/adam.hpp"
#include "pilotstack/nn/architecture.hpp"
#include "pilotstack/nn/model.hpp"

namespace pilot::nn {

struct TrainConfig {
  std::size_t epochs = 60;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-7;
  std::uint64_t seed = 0;
  double val_fraction = 0.2;

  void validate() const;
  AdamConfig adam() const { return {learning_rate, adam_beta1, adam_beta2, adam_eps}; }
};

struct EpochLoss {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;

  friend bool operator==(const EpochLoss&, const EpochLoss&) = default;
};

struct TrainResult {
  ModelParams params;  // from the epoch with the lowest validation loss
  std::vector<EpochLoss> history;
  std::size_t best_epoch = 0;
};

/// Raised when a batch produces a non-finite loss.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Byte-valued pixels to [0, 1], in place.
void normalize_pixels(Tensor& images);

/// Mean dual-head loss over `dataset` in inference mode, evaluated in chunks.
double evaluate_loss(const ModelParams& params, const Dataset& dataset, std::size_t chunk = 64);

using EpochCallback = std::function<void(const EpochLoss&)>;

/// Mini-batch Adam on the dual-head MSE. Every random choice (initial
/// weights, split, batch order, dropout masks) derives from config.seed.
/// A dataset too small to hold out a validation sample is scored on its
/// training samples instead.
TrainResult train(const Dataset& dataset, const TrainConfig& config,
                  const ArchitectureSpec& arch = default_architecture(), const EpochCallback& on_epoch = {});

/// "epoch,train_loss,val_loss" with one row per epoch.
void write_loss_csv(const std::vector<EpochLoss>& history, const std::filesystem::path& path);

}  // namespace pilot::nn
