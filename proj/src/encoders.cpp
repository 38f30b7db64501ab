#include "ltrajdiff/encoders.hpp"

#include <numeric>

#include "ltrajdiff/errors.hpp"

namespace ltrajdiff {

void EncoderConfig::validate() const {
  if (embed_dim <= 0 || num_heads <= 0 || num_layers < 0 || feedforward_dim <= 0 || max_len <= 0) {
    throw ConfigError("encoder: dimensions must be positive");
  }
  if (embed_dim % num_heads != 0) throw ConfigError("encoder.embed_dim: must be divisible by num_heads");
}

TransformerEncoder::TransformerEncoder(nn::ParameterSet& params, const std::string& prefix, int input_dim,
                                       const EncoderConfig& config)
    : config_(config), input_dim_(input_dim) {
  config.validate();
  const int d = config.embed_dim;
  input_ = nn::Linear(params, prefix + ".input", input_dim, d);
  for (int l = 0; l < config.num_layers; ++l) {
    const std::string p = prefix + ".layer" + std::to_string(l);
    layers_.push_back(Layer{nn::MultiHeadAttention(params, p + ".attention", d, config.num_heads),
                            nn::LayerNorm(params, p + ".norm1", d),
                            nn::FeedForward(params, p + ".feed_forward", d, config.feedforward_dim),
                            nn::LayerNorm(params, p + ".norm2", d)});
  }
  output_ = nn::Linear(params, prefix + ".output", d, d);
}

void TransformerEncoder::init(nn::ParameterSet& params, Rng& rng) const {
  input_.init(params, rng);
  for (const auto& layer : layers_) {
    layer.attention.init(params, rng);
    layer.norm1.init(params);
    layer.feed_forward.init(params, rng);
    layer.norm2.init(params);
  }
  output_.init(params, rng);
}

nn::Var TransformerEncoder::forward(nn::Graph& g, nn::Var input, std::span<const int> positions) const {
  const nn::Matrix& in = g.tape.value(input);
  if (in.cols() != input_dim_) throw ArgumentError("encoder: input width mismatch");
  if (static_cast<std::size_t>(in.rows()) != positions.size()) throw ArgumentError("encoder: positions mismatch");
  if (in.rows() > config_.max_len) {
    throw ConfigError("encoder: sequence length " + std::to_string(in.rows()) + " exceeds max_len " +
                      std::to_string(config_.max_len));
  }
  for (int p : positions) {
    if (p < 0 || p >= config_.max_len) throw ConfigError("encoder: position index exceeds max_len");
  }
  if (!in.allFinite()) throw NumericError("encoder: non-finite input");

  auto& t = g.tape;
  nn::Var x = t.add(input_(g, input), t.constant(nn::sinusoidal_encoding(positions, config_.embed_dim)));
  for (const auto& layer : layers_) {
    x = layer.norm1(g, t.add(x, layer.attention(g, x, x)));
    x = layer.norm2(g, t.add(x, layer.feed_forward(g, x)));
  }
  return output_(g, x);
}

TemporalAlignmentModule::TemporalAlignmentModule(nn::ParameterSet& params, int channel_count,
                                                 const EncoderConfig& config)
    : encoder_(params, "tam", kLayoutDim + channel_count, config) {}

nn::Var TemporalAlignmentModule::forward(nn::Graph& g, nn::Var masked_layout, nn::Var mobile) const {
  const auto rows = g.tape.value(masked_layout).rows();
  if (g.tape.value(mobile).rows() != rows) throw ValidationError("tam: layout/mobile length mismatch");
  std::vector<int> positions(static_cast<std::size_t>(rows));
  std::iota(positions.begin(), positions.end(), 0);
  return encoder_.forward(g, g.tape.concat_cols(masked_layout, mobile), positions);
}

LayoutExtractingModule::LayoutExtractingModule(nn::ParameterSet& params, const EncoderConfig& config)
    : encoder_(params, "lem", kLayoutDim, config) {}

nn::Var LayoutExtractingModule::encode_visible(nn::Graph& g, nn::Var layout, const VisibilityMask& mask) const {
  if (static_cast<std::size_t>(g.tape.value(layout).rows()) != mask.size()) {
    throw ValidationError("lem: layout/mask length mismatch");
  }
  std::vector<int> visible = visible_timestamps(mask);
  if (visible.empty()) throw ValidationError("lem: no visible timestamp");
  const nn::Var gathered = g.tape.gather_rows(layout, visible);
  return encoder_.forward(g, gathered, visible);
}

nn::Var LayoutExtractingModule::forward(nn::Graph& g, nn::Var layout, const VisibilityMask& mask) const {
  return g.tape.mean_rows(encode_visible(g, layout, mask));
}

nn::Matrix tam_forward(const TemporalAlignmentModule& tam, const nn::ParameterSet& params,
                       const nn::Matrix& masked_layout, const nn::Matrix& mobile) {
  nn::Tape tape(false);
  nn::Graph g{tape, params};
  return tape.value(tam.forward(g, tape.constant(masked_layout), tape.constant(mobile)));
}

nn::Matrix lem_forward(const LayoutExtractingModule& lem, const nn::ParameterSet& params, const nn::Matrix& layout,
                       const VisibilityMask& mask) {
  nn::Tape tape(false);
  nn::Graph g{tape, params};
  return tape.value(lem.forward(g, tape.constant(layout), mask));
}

std::size_t count_params(const nn::ParameterSet& params) { return params.scalar_count(); }

}  // namespace ltrajdiff
