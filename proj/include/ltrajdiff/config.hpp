#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ltrajdiff/baselines.hpp"
#include "ltrajdiff/metrics.hpp"
#include "ltrajdiff/model.hpp"
#include "ltrajdiff/synthdata.hpp"
#include "ltrajdiff/train.hpp"

namespace ltrajdiff {

struct DataConfig {
  int n_samples = 2000;
  SplitFractions split;
};

struct EvalConfig {
  MaskSpec mask;
  IouDepthMode iou_d_mode = IouDepthMode::kAgreement;
  std::size_t max_samples = 0;
  bool keep_sequences = true;
};

struct AblateConfig {
  std::vector<std::string> variants;  // empty = complete + every single-flag variant
  std::vector<std::uint64_t> seeds{0, 1, 2};
};

// One document for every subcommand.
struct RunConfig {
  std::uint64_t seed = 0;
  SceneConfig scene;
  DataConfig data;
  std::string model_kind = "ltrajdiff";  // ltrajdiff | baseline-attention | baseline-recurrent
  ModelConfig model;
  TrainConfig train;
  EvalConfig eval;
  AblateConfig ablate;
  std::string run_dir = "runs/default";

  void validate() const;  // throws ConfigError naming the field
  BaselineConfig baseline() const;
};

nlohmann::json default_config_json();
nlohmann::json to_json(const RunConfig& config);

// Merges doc onto the defaults; unknown keys and type mismatches raise
// ConfigError naming the dotted path.
RunConfig run_config_from_json(const nlohmann::json& doc);
RunConfig load_run_config(const std::string& path);

// "a.b.c=value" where value is JSON (bare words are taken as strings).
void apply_override(nlohmann::json& doc, const std::string& assignment);

}  // namespace ltrajdiff
