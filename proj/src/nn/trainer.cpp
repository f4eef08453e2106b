#include "pilotstack/nn/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pilotstack/error.hpp"
#include "pilotstack/nn/layers.hpp"
#include "pilotstack/rng.hpp"

namespace pilot::nn {

namespace {

constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kDropoutStream = 2;
constexpr std::uint64_t kBatchStream = 3;

Tensor head_column(const Tensor& labels, std::size_t col) {
  const std::size_t b = labels.shape()[0];
  Tensor out({b, 1});
  for (std::size_t i = 0; i < b; ++i) out[i] = labels[2 * i + col];
  return out;
}

DualHeadLoss<float> batch_loss(const ForwardResult<float>& fwd, const Tensor& labels) {
  return mse_dual_head_loss(fwd.steering, fwd.throttle, head_column(labels, 0), head_column(labels, 1));
}

std::vector<std::size_t> iota_indices(std::size_t begin, std::size_t end) {
  std::vector<std::size_t> out;
  out.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) out.push_back(i);
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("train.epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("train.batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("train.learning_rate must be a finite value >= 0");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw ValidationError("train.adam_beta1 must be in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw ValidationError("train.adam_beta2 must be in [0, 1)");
  if (!(adam_eps > 0.0)) throw ValidationError("train.adam_eps must be > 0");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ValidationError("train.val_fraction must be in (0, 1)");
}

void normalize_pixels(Tensor& images) {
  for (float& v : images.values()) v /= 255.0f;
}

double evaluate_loss(const ModelParams& params, const Dataset& dataset, std::size_t chunk) {
  if (dataset.empty()) throw ValidationError("cannot evaluate on an empty dataset");
  double total = 0.0;
  for (std::size_t begin = 0; begin < dataset.size(); begin += chunk) {
    const std::size_t end = std::min(dataset.size(), begin + chunk);
    Batch batch = make_batch(dataset, iota_indices(begin, end));
    normalize_pixels(batch.images);
    const auto fwd = model_forward(params, batch.images, Mode::Infer);
    total += batch_loss(fwd, batch.labels).loss * static_cast<double>(end - begin);
  }
  return total / static_cast<double>(dataset.size());
}

TrainResult train(const Dataset& dataset, const TrainConfig& config, const ArchitectureSpec& arch,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (dataset.empty()) throw ValidationError("no records found: training needs a non-empty dataset");
  const InputLayer& in = arch.input();
  if (dataset.height() != in.height || dataset.width() != in.width || in.channels != 3) {
    std::ostringstream msg;
    msg << "dataset images are " << dataset.width() << "x" << dataset.height() << " but the model expects "
        << in.width << "x" << in.height;
    throw ValidationError(msg.str());
  }

  Dataset train_set;
  Dataset val_set;
  if (dataset.size() >= 2) {
    auto split = split_train_val(dataset, config.val_fraction, derive_seed(config.seed, kSplitStream));
    train_set = std::move(split.first);
    val_set = std::move(split.second);
  } else {
    train_set = dataset;
  }
  const Dataset& scored = val_set.empty() ? train_set : val_set;

  TrainResult result;
  ModelParams params = initialize_params(arch, config.seed);
  AdamState state = AdamState::for_params(params);
  const AdamConfig adam = config.adam();
  Rng dropout_rng(derive_seed(config.seed, kDropoutStream));
  const std::uint64_t batch_seed = derive_seed(config.seed, kBatchStream);

  double best_val = 0.0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const BatchSequence batches(train_set, config.batch_size, batch_seed, epoch - 1);
    double train_total = 0.0;
    for (std::size_t k = 0; k < batches.size(); ++k) {
      Batch batch = batches[k];
      normalize_pixels(batch.images);
      const auto fwd = model_forward(params, batch.images, Mode::Train, &dropout_rng);
      const auto loss = batch_loss(fwd, batch.labels);
      if (!std::isfinite(loss.loss)) {
        std::ostringstream msg;
        msg << "non-finite loss " << loss.loss << " at epoch " << epoch << ", batch " << k + 1 << " of "
            << batches.size() << "; lower the learning rate or check the labels";
        throw TrainingError(msg.str());
      }
      train_total += loss.loss * static_cast<double>(batch.indices.size());
      const auto grads = model_backward(params, fwd.cache, loss.grad_steering, loss.grad_throttle);
      adam_step(params, grads, state, adam);
    }

    EpochLoss row{epoch, train_total / static_cast<double>(train_set.size()), evaluate_loss(params, scored)};
    if (!std::isfinite(row.val_loss)) {
      throw TrainingError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    result.history.push_back(row);
    if (epoch == 1 || row.val_loss < best_val) {
      best_val = row.val_loss;
      result.best_epoch = epoch;
      result.params = params;
    }
    if (on_epoch) on_epoch(row);
  }
  return result;
}

void write_loss_csv(const std::vector<EpochLoss>& history, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch,train_loss,val_loss\n";
  char line[96];
  for (const auto& row : history) {
    std::snprintf(line, sizeof line, "%zu,%.9g,%.9g\n", row.epoch, row.train_loss, row.val_loss);
    out << line;
  }
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace pilot::nn
