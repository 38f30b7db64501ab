#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ltrajdiff/config.hpp"

namespace ltrajdiff {

struct AblationRow {
  std::string variant;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double mse_t = 0.0;
  double iou_d = 0.0;
  double val_mse_t = 0.0;
  double untrained_val_mse_t = 0.0;
  int best_epoch = -1;

  nlohmann::json to_json() const;
};

struct AblationTable {
  std::vector<AblationRow> rows;
  std::string mask_spec;

  // Per-variant mean over successful seeds.
  nlohmann::json summary() const;
  const AblationRow* find(const std::string& variant, std::uint64_t seed) const;
};

using AblationProgress = std::function<void(const AblationRow&)>;

// Trains and evaluates each variant per seed on (train, val) and scores it on
// test under config.eval. A variant that throws is recorded and the suite moves on.
AblationTable run_ablation_suite(const RunConfig& base, const Dataset& train, const Dataset& val, const Dataset& test,
                                 const std::vector<std::string>& variants, const std::vector<std::uint64_t>& seeds,
                                 const AblationProgress& progress = {});

// Trains one LTrajDiff variant with the given seed; used by the suite.
AblationRow run_variant(const RunConfig& base, const std::string& variant, std::uint64_t seed, const Dataset& train,
                        const Dataset& val, const Dataset& test);

}  // namespace ltrajdiff
