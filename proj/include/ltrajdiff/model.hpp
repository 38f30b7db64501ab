#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ltrajdiff/diffusion.hpp"
#include "ltrajdiff/encoders.hpp"
#include "ltrajdiff/fusion.hpp"
#include "ltrajdiff/trainable.hpp"

namespace ltrajdiff {

struct AblationFlags {
  bool disable_rms = false;
  bool disable_mfm = false;
  bool disable_tam = false;
  bool disable_lem = false;
  bool drop_mobile_modality = false;
  bool drop_visual_modality = false;

  void validate() const;  // throws ConfigError
  bool any() const;
  // Canonical variant name: "complete", "w/o-rms", "w/o-mfm", "w/o-tam",
  // "w/o-lem", "w/o-mobile", "w/o-visual"; combinations join with '+'.
  std::string name() const;
  static AblationFlags from_name(const std::string& name);
  friend bool operator==(const AblationFlags&, const AblationFlags&) = default;
};

// The seven single-flag variants (plus complete) in a fixed order.
std::vector<std::string> ablation_variant_names();

struct ModelConfig {
  EncoderConfig encoder;
  DiffusionConfig diffusion;
  SigmaMode sigma_mode = SigmaMode::kSoftplus;
  AblationFlags ablation;
  int channel_count = 19;

  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Hash of everything that changes what a trained model computes.
std::string model_config_hash(const ModelConfig& config);

// TAM + LEM -> MFM -> conditional noise-prediction decoder, sampled by
// ancestral DDPM. Operates on standardized layouts internally.
class LTrajDiffModel : public TrainableModel {
 public:
  LTrajDiffModel(const ModelConfig& config, std::uint64_t init_seed);

  std::string kind() const override { return "ltrajdiff"; }
  nn::ParameterSet& parameters() override { return params_; }
  const nn::ParameterSet& parameters() const override { return params_; }
  void fit_normalization(const Dataset& train) override;
  void set_normalization(Standardizer layout, Standardizer mobile);
  double sample_loss(const AgentSample& sample, const VisibilityMask& mask, Rng& rng,
                     nn::GradientBuffer* grads) const override;
  bool trains_with_full_visibility() const override { return config_.ablation.disable_rms; }
  nlohmann::json describe() const override;
  LayoutSequence predict(const PredictorInput& input, Rng& rng) const override;

  PreparedInput prepare(const LayoutSequence& masked_layout, const MobileSignalSequence& mobile,
                        const VisibilityMask& mask) const;
  // Conditioning sequence z (T x D), honoring the ablation flags.
  nn::Var conditioning(nn::Graph& g, const PreparedInput& input) const;
  nn::Matrix conditioning(const PreparedInput& input) const;
  // Standardized sample y_0 before restoring pixel/meter units.
  nn::Matrix sample_standardized(const PreparedInput& input, Rng& rng) const;

  const ModelConfig& config() const { return config_; }
  const NoiseSchedule& schedule() const { return schedule_; }
  const NoiseDecoder& decoder() const { return decoder_; }
  const Standardizer& layout_normalizer() const { return layout_norm_; }
  const Standardizer& mobile_normalizer() const { return mobile_norm_; }
  bool has_tam() const { return tam_.has_value(); }
  bool has_lem() const { return lem_.has_value(); }

 private:
  ModelConfig config_;
  nn::ParameterSet params_;
  std::optional<TemporalAlignmentModule> tam_;
  std::optional<LayoutExtractingModule> lem_;
  ModalityFusionModule fusion_;
  std::optional<nn::Linear> concat_projection_;  // w/o-MFM substitute
  NoiseDecoder decoder_;
  NoiseSchedule schedule_;
  Standardizer layout_norm_;
  Standardizer mobile_norm_;
};

}  // namespace ltrajdiff
