#pragma once

#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "ltrajdiff/trainable.hpp"

namespace ltrajdiff {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  nlohmann::json model;         // TrainableModel::describe()
  nlohmann::json train_config;  // TrainConfig::to_json(), or null
  int epoch = -1;
  nlohmann::json rng_state;     // seed plan the run was derived from
  nlohmann::json metrics;       // snapshot (best val MSE-T, ...)
  std::string config_hash;
  nn::ParameterSet tensors;
};

// Hash of the model configuration block of describe().
std::string config_hash_of(const nlohmann::json& model_description);

Checkpoint make_checkpoint(const TrainableModel& model);

// Binary container: magic, version, JSON header, named tensors, FNV-1a
// checksum. A text manifest is written next to it (<path>.manifest).
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);  // IntegrityError / ParseError
std::string checkpoint_manifest_path(const std::string& path);
std::string checkpoint_manifest(const Checkpoint& ckpt);

// Rebuilds the model described by the checkpoint and copies its tensors in.
std::unique_ptr<TrainableModel> restore_model(const Checkpoint& ckpt);

// Warning text when the checkpoint was trained under a different model config.
std::optional<std::string> config_hash_warning(const Checkpoint& ckpt, const std::string& expected_hash);

}  // namespace ltrajdiff
