#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ltrajdiff/masking.hpp"
#include "ltrajdiff/trainable.hpp"

namespace ltrajdiff {

struct TrainConfig {
  double learning_rate = 1e-3;
  double lr_gamma = 0.98;  // per-epoch exponential decay
  int batch_size = 64;
  int epochs = 50;
  std::uint64_t seed = 0;
  std::string optimizer = "adam";
  MaskSpec mask_spec;  // training masks (random = RMS)
  int val_every = 5;      // validate every n epochs and after the last one
  int val_samples = 48;   // 0 = whole validation split
  double grad_clip = 0.0; // global-norm clip, 0 = off
  bool parallel = true;

  void validate() const;  // throws ConfigError
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Learning rate used during epoch n (0-based).
double learning_rate_at(const TrainConfig& config, int epoch);

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  bool validated = false;
  double val_mse_t = 0.0;
  double val_iou_d = 0.0;
  double seconds = 0.0;

  nlohmann::json to_json() const;
};

struct TrainResult {
  std::vector<EpochRecord> log;
  int best_epoch = -1;
  double best_val_mse_t = 0.0;
  double untrained_val_mse_t = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Shuffles, batches and steps the model; validation MSE-T selects the
// returned parameters (left in the model). Throws DivergenceError on a
// non-finite loss or gradient.
TrainResult train(TrainableModel& model, const Dataset& train_set, const Dataset& val_set, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// Validation pass shared by the trainer and callers.
double validation_mse_t(const TrainableModel& model, const Dataset& val_set, const TrainConfig& config,
                        double* iou_d = nullptr);

}  // namespace ltrajdiff
