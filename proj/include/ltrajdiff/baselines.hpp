#pragma once

#include <string>

#include "ltrajdiff/diffusion.hpp"
#include "ltrajdiff/encoders.hpp"
#include "ltrajdiff/trainable.hpp"

namespace ltrajdiff {

enum class BaselineKind { kRecurrent, kAttention };

const char* to_string(BaselineKind kind);
BaselineKind baseline_kind_from_string(const std::string& name);

struct BaselineConfig {
  BaselineKind kind = BaselineKind::kAttention;
  EncoderConfig encoder;  // hidden size = embed_dim for the recurrent kind
  int channel_count = 19;

  void validate() const;
  nlohmann::json to_json() const;
  static BaselineConfig from_json(const nlohmann::json& j);
  friend bool operator==(const BaselineConfig&, const BaselineConfig&) = default;
};

// Single-layer LSTM. Gates packed as [input, forget, cell, output].
struct LstmCell {
  nn::Linear input;   // in -> 4H
  nn::Linear hidden;  // H -> 4H
  int hidden_dim = 0;

  LstmCell() = default;
  LstmCell(nn::ParameterSet& params, const std::string& name, int in_dim, int hidden_dim);
  void init(nn::ParameterSet& params, Rng& rng) const;
  // One step; h and c are 1 x H.
  void step(nn::Graph& g, nn::Var x, nn::Var& h, nn::Var& c) const;
};

// Direct-regression seq2seq baselines over the per-timestamp concatenation
// (masked layout, mobile), trained with mean squared error.
class Seq2SeqBaseline : public TrainableModel {
 public:
  Seq2SeqBaseline(const BaselineConfig& config, std::uint64_t init_seed);

  std::string kind() const override { return std::string("baseline-") + to_string(config_.kind); }
  nn::ParameterSet& parameters() override { return params_; }
  const nn::ParameterSet& parameters() const override { return params_; }
  void fit_normalization(const Dataset& train) override;
  void set_normalization(Standardizer layout, Standardizer mobile);
  double sample_loss(const AgentSample& sample, const VisibilityMask& mask, Rng& rng,
                     nn::GradientBuffer* grads) const override;
  nlohmann::json describe() const override;
  LayoutSequence predict(const PredictorInput& input, Rng& rng) const override;

  // Standardized T x 5 output.
  nn::Var forward(nn::Graph& g, const PreparedInput& input) const;
  const BaselineConfig& config() const { return config_; }

 private:
  BaselineConfig config_;
  nn::ParameterSet params_;
  // recurrent
  LstmCell encoder_cell_;
  LstmCell decoder_cell_;
  nn::Linear output_;
  // attention
  TransformerEncoder encoder_;
  NoiseDecoder decoder_;
  Standardizer layout_norm_;
  Standardizer mobile_norm_;
};

}  // namespace ltrajdiff
