#pragma once

#include <string>
#include <vector>

#include "ltrajdiff/core.hpp"
#include "ltrajdiff/nn/layers.hpp"

namespace ltrajdiff {

struct EncoderConfig {
  int embed_dim = 64;
  int num_heads = 4;
  int num_layers = 2;
  int feedforward_dim = 128;
  int max_len = 128;

  void validate() const;  // throws ConfigError
  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

// input projection -> + sinusoidal position code -> num_layers x
// [self-attention, residual, layer norm, feed-forward, residual, layer norm]
// -> output projection.
class TransformerEncoder {
 public:
  TransformerEncoder() = default;
  TransformerEncoder(nn::ParameterSet& params, const std::string& prefix, int input_dim, const EncoderConfig& config);

  void init(nn::ParameterSet& params, Rng& rng) const;
  // positions[i] is the sequence index used for the position code of row i.
  nn::Var forward(nn::Graph& g, nn::Var input, std::span<const int> positions) const;

  int input_dim() const { return input_dim_; }
  const EncoderConfig& config() const { return config_; }

 private:
  struct Layer {
    nn::MultiHeadAttention attention;
    nn::LayerNorm norm1;
    nn::FeedForward feed_forward;
    nn::LayerNorm norm2;
  };

  EncoderConfig config_;
  int input_dim_ = 0;
  nn::Linear input_;
  std::vector<Layer> layers_;
  nn::Linear output_;
};

// TAM: per-timestamp concat(masked layout, mobile) -> T x D aligned embedding.
class TemporalAlignmentModule {
 public:
  TemporalAlignmentModule() = default;
  TemporalAlignmentModule(nn::ParameterSet& params, int channel_count, const EncoderConfig& config);

  void init(nn::ParameterSet& params, Rng& rng) const { encoder_.init(params, rng); }
  nn::Var forward(nn::Graph& g, nn::Var masked_layout, nn::Var mobile) const;

 private:
  TransformerEncoder encoder_;
};

// LEM: encodes the visible frames only (each tagged with its original index)
// and mean-pools them to one D-vector.
class LayoutExtractingModule {
 public:
  LayoutExtractingModule() = default;
  LayoutExtractingModule(nn::ParameterSet& params, const EncoderConfig& config);

  void init(nn::ParameterSet& params, Rng& rng) const { encoder_.init(params, rng); }
  nn::Var forward(nn::Graph& g, nn::Var layout, const VisibilityMask& mask) const;
  // Encoder output for the visible rows before pooling.
  nn::Var encode_visible(nn::Graph& g, nn::Var layout, const VisibilityMask& mask) const;

 private:
  TransformerEncoder encoder_;
};

// Inference helpers (inputs already preprocessed into model space: T x 5 and
// T x C matrices, masked rows zero).
nn::Matrix tam_forward(const TemporalAlignmentModule& tam, const nn::ParameterSet& params,
                       const nn::Matrix& masked_layout, const nn::Matrix& mobile);
nn::Matrix lem_forward(const LayoutExtractingModule& lem, const nn::ParameterSet& params, const nn::Matrix& layout,
                       const VisibilityMask& mask);

std::size_t count_params(const nn::ParameterSet& params);

}  // namespace ltrajdiff
