#include "ltrajdiff/ablation.hpp"

#include <map>

namespace ltrajdiff {

nlohmann::json AblationRow::to_json() const {
  nlohmann::json j = {{"variant", variant}, {"seed", seed}, {"ok", ok}};
  if (ok) {
    j["mse_t"] = mse_t;
    j["iou_d"] = iou_d;
    j["val_mse_t"] = val_mse_t;
    j["untrained_val_mse_t"] = untrained_val_mse_t;
    j["best_epoch"] = best_epoch;
  } else {
    j["error"] = error;
  }
  return j;
}

nlohmann::json AblationTable::summary() const {
  std::vector<std::string> order;
  std::map<std::string, std::tuple<double, double, int>> acc;
  for (const auto& r : rows) {
    if (!acc.count(r.variant)) {
      order.push_back(r.variant);
      acc[r.variant] = {0.0, 0.0, 0};
    }
    if (!r.ok) continue;
    auto& [m, i, n] = acc[r.variant];
    m += r.mse_t;
    i += r.iou_d;
    ++n;
  }
  nlohmann::json out = nlohmann::json::array();
  for (const auto& v : order) {
    const auto& [m, i, n] = acc[v];
    nlohmann::json row = {{"variant", v}, {"seeds_ok", n}};
    if (n > 0) {
      row["mse_t"] = m / n;
      row["iou_d"] = i / n;
    }
    out.push_back(row);
  }
  return out;
}

const AblationRow* AblationTable::find(const std::string& variant, std::uint64_t seed) const {
  for (const auto& r : rows) {
    if (r.variant == variant && r.seed == seed) return &r;
  }
  return nullptr;
}

AblationRow run_variant(const RunConfig& base, const std::string& variant, std::uint64_t seed, const Dataset& train,
                        const Dataset& val, const Dataset& test) {
  AblationRow row;
  row.variant = variant;
  row.seed = seed;
  ModelConfig mc = base.model;
  mc.ablation = AblationFlags::from_name(variant);
  mc.channel_count = train.channel_count();
  TrainConfig tc = base.train;
  tc.seed = seed;
  LTrajDiffModel model(mc, SeedPlan::from(seed).init);
  const TrainResult tr = ltrajdiff::train(model, train, val, tc);
  EvalOptions eo;
  eo.mask = base.eval.mask;
  eo.iou_d_mode = base.eval.iou_d_mode;
  eo.seed = SeedPlan::from(seed).sampling;
  eo.max_samples = base.eval.max_samples;
  eo.keep_sequences = false;
  const EvalReport rep = evaluate(model, test, eo);
  row.ok = true;
  row.mse_t = rep.mse_t;
  row.iou_d = rep.iou_d;
  row.val_mse_t = tr.best_val_mse_t;
  row.untrained_val_mse_t = tr.untrained_val_mse_t;
  row.best_epoch = tr.best_epoch;
  return row;
}

AblationTable run_ablation_suite(const RunConfig& base, const Dataset& train, const Dataset& val, const Dataset& test,
                                 const std::vector<std::string>& variants, const std::vector<std::uint64_t>& seeds,
                                 const AblationProgress& progress) {
  AblationTable table;
  table.mask_spec = base.eval.mask.to_string();
  const std::vector<std::string> names = variants.empty() ? ablation_variant_names() : variants;
  for (const auto& seed : seeds) {
    for (const auto& v : names) {
      AblationRow row;
      try {
        row = run_variant(base, v, seed, train, val, test);
      } catch (const std::exception& e) {
        row.variant = v;
        row.seed = seed;
        row.ok = false;
        row.error = e.what();
      }
      if (progress) progress(row);
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

}  // namespace ltrajdiff
