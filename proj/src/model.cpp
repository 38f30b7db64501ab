#include "ltrajdiff/model.hpp"

#include <sstream>

#include "ltrajdiff/errors.hpp"
#include "ltrajdiff/hashing.hpp"

namespace ltrajdiff {

void AblationFlags::validate() const {
  if (drop_mobile_modality && drop_visual_modality) {
    throw ConfigError("ablation: cannot drop both the mobile and the visual modality");
  }
  if (disable_tam && (disable_lem || drop_visual_modality)) {
    throw ConfigError("ablation: disabling TAM together with LEM leaves no conditioning");
  }
}

bool AblationFlags::any() const { return !(*this == AblationFlags{}); }

namespace {

struct VariantName {
  const char* name;
  bool AblationFlags::*flag;
};

constexpr VariantName kVariants[] = {
    {"w/o-rms", &AblationFlags::disable_rms},
    {"w/o-mfm", &AblationFlags::disable_mfm},
    {"w/o-tam", &AblationFlags::disable_tam},
    {"w/o-lem", &AblationFlags::disable_lem},
    {"w/o-mobile", &AblationFlags::drop_mobile_modality},
    {"w/o-visual", &AblationFlags::drop_visual_modality},
};

}  // namespace

std::string AblationFlags::name() const {
  std::string out;
  for (const auto& v : kVariants) {
    if (this->*v.flag) out += (out.empty() ? "" : "+") + std::string(v.name);
  }
  return out.empty() ? "complete" : out;
}

AblationFlags AblationFlags::from_name(const std::string& name) {
  AblationFlags flags;
  if (name == "complete" || name.empty()) return flags;
  std::stringstream ss(name);
  std::string part;
  while (std::getline(ss, part, '+')) {
    bool found = false;
    for (const auto& v : kVariants) {
      if (part == v.name) {
        flags.*v.flag = true;
        found = true;
      }
    }
    if (!found) throw ConfigError("unknown ablation variant '" + part + "'");
  }
  flags.validate();
  return flags;
}

std::vector<std::string> ablation_variant_names() {
  std::vector<std::string> names{"complete"};
  for (const auto& v : kVariants) names.emplace_back(v.name);
  return names;
}

void ModelConfig::validate() const {
  encoder.validate();
  diffusion.validate();
  ablation.validate();
  if (channel_count < 1) throw ConfigError("model.channel_count: must be >= 1");
}

nlohmann::json ModelConfig::to_json() const {
  return {
      {"encoder",
       {{"embed_dim", encoder.embed_dim},
        {"num_heads", encoder.num_heads},
        {"num_layers", encoder.num_layers},
        {"feedforward_dim", encoder.feedforward_dim},
        {"max_len", encoder.max_len}}},
      {"diffusion",
       {{"K", diffusion.K},
        {"beta_start", diffusion.beta_start},
        {"beta_end", diffusion.beta_end},
        {"lambda", diffusion.lambda},
        {"deterministic_sampling", diffusion.deterministic_sampling}}},
      {"fusion", {{"sigma_mode", to_string(sigma_mode)}}},
      {"ablation", ablation.name()},
      {"channel_count", channel_count},
  };
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  const auto& e = j.at("encoder");
  c.encoder.embed_dim = e.at("embed_dim").get<int>();
  c.encoder.num_heads = e.at("num_heads").get<int>();
  c.encoder.num_layers = e.at("num_layers").get<int>();
  c.encoder.feedforward_dim = e.at("feedforward_dim").get<int>();
  c.encoder.max_len = e.at("max_len").get<int>();
  const auto& d = j.at("diffusion");
  c.diffusion.K = d.at("K").get<int>();
  c.diffusion.beta_start = d.at("beta_start").get<double>();
  c.diffusion.beta_end = d.at("beta_end").get<double>();
  c.diffusion.lambda = d.at("lambda").get<double>();
  c.diffusion.deterministic_sampling = d.at("deterministic_sampling").get<bool>();
  c.sigma_mode = sigma_mode_from_string(j.at("fusion").at("sigma_mode").get<std::string>());
  c.ablation = AblationFlags::from_name(j.at("ablation").get<std::string>());
  c.channel_count = j.at("channel_count").get<int>();
  return c;
}

std::string model_config_hash(const ModelConfig& config) { return hex64(fnv1a64(config.to_json().dump())); }

LTrajDiffModel::LTrajDiffModel(const ModelConfig& config, std::uint64_t init_seed) : config_(config) {
  config.validate();
  const auto& ab = config.ablation;
  const int d = config.encoder.embed_dim;
  if (!ab.disable_tam) tam_.emplace(params_, config.channel_count, config.encoder);
  if (!ab.disable_lem && !ab.drop_visual_modality) lem_.emplace(params_, config.encoder);
  fusion_ = ModalityFusionModule(params_, d, config.sigma_mode);
  if (ab.disable_mfm) concat_projection_.emplace(params_, "fusion.concat_projection", 2 * d, d);
  decoder_ = NoiseDecoder(params_, config.encoder);
  schedule_ = linear_schedule(config.diffusion.K, config.diffusion.beta_start, config.diffusion.beta_end);
  decoder_.attach_schedule(schedule_);

  Rng rng(init_seed);
  if (tam_) tam_->init(params_, rng);
  if (lem_) lem_->init(params_, rng);
  fusion_.init(params_, rng);
  if (concat_projection_) concat_projection_->init(params_, rng);
  decoder_.init(params_, rng);

  // Identity standardization until fitted.
  layout_norm_.mean.assign(kLayoutDim, 0.0);
  layout_norm_.scale.assign(kLayoutDim, 1.0);
  mobile_norm_.mean.assign(static_cast<std::size_t>(config.channel_count), 0.0);
  mobile_norm_.scale.assign(static_cast<std::size_t>(config.channel_count), 1.0);
}

void LTrajDiffModel::fit_normalization(const Dataset& train) {
  if (train.channel_count() != config_.channel_count) {
    throw ValidationError("dataset channel count " + std::to_string(train.channel_count()) +
                          " differs from model channel count " + std::to_string(config_.channel_count));
  }
  set_normalization(fit_layout_standardizer(train), fit_mobile_standardizer(train));
}

void LTrajDiffModel::set_normalization(Standardizer layout, Standardizer mobile) {
  if (layout.dim() != kLayoutDim || mobile.dim() != static_cast<std::size_t>(config_.channel_count)) {
    throw ValidationError("normalization dimensions do not match the model");
  }
  layout_norm_ = std::move(layout);
  mobile_norm_ = std::move(mobile);
}

PreparedInput LTrajDiffModel::prepare(const LayoutSequence& masked_layout, const MobileSignalSequence& mobile,
                                      const VisibilityMask& mask) const {
  PreparedInput p = prepare_input(layout_norm_, mobile_norm_, masked_layout, mobile, mask);
  if (config_.ablation.drop_mobile_modality) p.mobile.setZero();
  return p;
}

nn::Var LTrajDiffModel::conditioning(nn::Graph& g, const PreparedInput& input) const {
  auto& t = g.tape;
  const auto& ab = config_.ablation;
  const int rows = static_cast<int>(input.layout.rows());
  const nn::Var layout = t.constant(input.layout);

  std::optional<nn::Var> temporal;
  if (tam_) {
    const nn::Var tam_layout = ab.drop_visual_modality
                                   ? t.constant(nn::Matrix::Zero(input.layout.rows(), input.layout.cols()))
                                   : layout;
    temporal = tam_->forward(g, tam_layout, t.constant(input.mobile));
  }
  std::optional<nn::Var> pooled;
  if (lem_) pooled = lem_->forward(g, layout, input.mask);

  if (temporal && pooled) {
    if (concat_projection_) {
      const nn::Var go = t.broadcast_rows(fusion_.layout_branch(g, *pooled), rows);
      return (*concat_projection_)(g, t.concat_cols(*temporal, go));
    }
    return fusion_.forward(g, *temporal, *pooled);
  }
  if (temporal) return fusion_.mean_branch(g, *temporal);
  return t.broadcast_rows(fusion_.layout_branch(g, *pooled), rows);
}

nn::Matrix LTrajDiffModel::conditioning(const PreparedInput& input) const {
  nn::Tape tape(false);
  nn::Graph g{tape, params_};
  return tape.value(conditioning(g, input));
}

double LTrajDiffModel::sample_loss(const AgentSample& sample, const VisibilityMask& mask, Rng& rng,
                                   nn::GradientBuffer* grads) const {
  const LayoutSequence masked = apply_mask(sample.layout, mask);
  const PreparedInput input = prepare(masked, sample.mobile, mask);
  const nn::Matrix target = standardize_layout(layout_norm_, sample.layout);
  nn::Tape tape(grads != nullptr);
  nn::Graph g{tape, params_};
  const nn::Var z = conditioning(g, input);
  const nn::Var loss =
      diffusion_training_loss(g, decoder_, z, target, schedule_, config_.diffusion.lambda, rng);
  if (grads) tape.backward(loss, grads);
  return tape.value(loss)(0, 0);
}

nn::Matrix LTrajDiffModel::sample_standardized(const PreparedInput& input, Rng& rng) const {
  const nn::Matrix z = conditioning(input);
  return sample(decoder_, params_, z, schedule_, rng, config_.diffusion.deterministic_sampling);
}

LayoutSequence LTrajDiffModel::predict(const PredictorInput& input, Rng& rng) const {
  const PreparedInput prepared = prepare(input.masked_layout, input.mobile, input.mask);
  return restore_layout(layout_norm_, sample_standardized(prepared, rng));
}

nlohmann::json LTrajDiffModel::describe() const {
  return {{"kind", kind()},
          {"config", config_.to_json()},
          {"layout_norm", layout_norm_.to_json()},
          {"mobile_norm", mobile_norm_.to_json()}};
}

}  // namespace ltrajdiff
