#include "ltrajdiff/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "ltrajdiff/errors.hpp"
#include "ltrajdiff/kernels.hpp"
#include "ltrajdiff/optim.hpp"

namespace ltrajdiff {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate: must be > 0");
  if (!(lr_gamma > 0.0 && lr_gamma <= 1.0)) throw ConfigError("train.lr_gamma: must be in (0, 1]");
  if (batch_size < 1) throw ConfigError("train.batch_size: must be >= 1");
  if (epochs < 1) throw ConfigError("train.epochs: must be >= 1");
  if (optimizer != "adam" && optimizer != "sgd") throw ConfigError("train.optimizer: expected adam or sgd");
  if (val_every < 1) throw ConfigError("train.val_every: must be >= 1");
  if (val_samples < 0) throw ConfigError("train.val_samples: must be >= 0");
  if (grad_clip < 0.0) throw ConfigError("train.grad_clip: must be >= 0");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate}, {"lr_gamma", lr_gamma},     {"batch_size", batch_size},
          {"epochs", epochs},               {"seed", seed},             {"optimizer", optimizer},
          {"mask", mask_spec.to_string()},  {"val_every", val_every},   {"val_samples", val_samples},
          {"grad_clip", grad_clip},         {"parallel", parallel}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.lr_gamma = j.at("lr_gamma").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.optimizer = j.at("optimizer").get<std::string>();
  c.mask_spec = MaskSpec::parse(j.at("mask").get<std::string>());
  c.val_every = j.at("val_every").get<int>();
  c.val_samples = j.at("val_samples").get<int>();
  c.grad_clip = j.at("grad_clip").get<double>();
  c.parallel = j.at("parallel").get<bool>();
  return c;
}

double learning_rate_at(const TrainConfig& config, int epoch) {
  return config.learning_rate * std::pow(config.lr_gamma, static_cast<double>(epoch));
}

nlohmann::json EpochRecord::to_json() const {
  nlohmann::json j = {{"epoch", epoch}, {"lr", lr}, {"train_loss", train_loss}, {"seconds", seconds}};
  if (validated) {
    j["val_mse_t"] = val_mse_t;
    j["val_iou_d"] = val_iou_d;
  }
  return j;
}

double validation_mse_t(const TrainableModel& model, const Dataset& val_set, const TrainConfig& config,
                        double* iou_d) {
  EvalOptions opts;
  opts.mask = MaskSpec{};  // random
  opts.seed = derive_seed(SeedPlan::from(config.seed).sampling, {0x7661});
  opts.max_samples = static_cast<std::size_t>(config.val_samples);
  opts.keep_sequences = false;
  const EvalReport report = evaluate(model, val_set, opts);
  if (iou_d) *iou_d = report.iou_d;
  return report.mse_t;
}

namespace {

bool all_finite(const nn::GradientBuffer& g) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!g[i].allFinite()) return false;
  }
  return true;
}

}  // namespace

TrainResult train(TrainableModel& model, const Dataset& train_set, const Dataset& val_set, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.samples.empty()) throw ValidationError("training split is empty");
  if (!model.parameters().size()) throw ConfigError("model has no parameters");

  const SeedPlan seeds = SeedPlan::from(config.seed);
  model.fit_normalization(train_set);
  auto optimizer = make_optimizer(config.optimizer, model.parameters());

  TrainResult result;
  const bool have_val = !val_set.samples.empty();
  if (have_val) result.untrained_val_mse_t = validation_mse_t(model, val_set, config);
  nn::ParameterSet best = model.parameters();

  const std::size_t n = train_set.samples.size();
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  std::vector<std::size_t> order(n);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = learning_rate_at(config, epoch);

    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng = make_rng(seeds.masks, {static_cast<std::uint64_t>(epoch)});
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t b0 = 0; b0 < n; b0 += batch) {
      std::vector<BatchItem> items;
      for (std::size_t i = b0; i < std::min(n, b0 + batch); ++i) {
        items.push_back({&train_set.samples[order[i]],
                         derive_seed(seeds.masks, {static_cast<std::uint64_t>(epoch), order[i]})});
      }
      BatchResult br = config.parallel ? batch_gradient_parallel(model, items, config.mask_spec)
                                       : batch_gradient_serial(model, items, config.mask_spec);
      if (!std::isfinite(br.loss) || !all_finite(br.grads)) {
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(batches));
      }
      if (config.grad_clip > 0.0) {
        const double norm = std::sqrt(br.grads.squared_norm());
        if (norm > config.grad_clip) br.grads.scale(config.grad_clip / norm);
      }
      optimizer->step(model.parameters(), br.grads, rec.lr);
      loss_sum += br.loss;
      ++batches;
    }
    rec.train_loss = loss_sum / batches;

    const bool last = epoch + 1 == config.epochs;
    if (have_val && ((epoch + 1) % config.val_every == 0 || last)) {
      rec.validated = true;
      rec.val_mse_t = validation_mse_t(model, val_set, config, &rec.val_iou_d);
      if (!std::isfinite(rec.val_mse_t)) {
        throw DivergenceError("non-finite validation MSE-T at epoch " + std::to_string(epoch));
      }
      if (result.best_epoch < 0 || rec.val_mse_t < result.best_val_mse_t) {
        result.best_epoch = epoch;
        result.best_val_mse_t = rec.val_mse_t;
        best = model.parameters();
      }
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  if (have_val) {
    model.parameters() = best;
  } else {
    result.best_epoch = config.epochs - 1;
  }
  return result;
}

}  // namespace ltrajdiff
