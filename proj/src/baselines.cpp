#include "ltrajdiff/baselines.hpp"

#include <numeric>

#include "ltrajdiff/errors.hpp"

namespace ltrajdiff {

const char* to_string(BaselineKind kind) { return kind == BaselineKind::kRecurrent ? "recurrent" : "attention"; }

BaselineKind baseline_kind_from_string(const std::string& name) {
  if (name == "recurrent" || name == "lstm") return BaselineKind::kRecurrent;
  if (name == "attention" || name == "transformer") return BaselineKind::kAttention;
  throw ConfigError("unknown baseline kind '" + name + "' (expected recurrent or attention)");
}

void BaselineConfig::validate() const {
  encoder.validate();
  if (channel_count < 1) throw ConfigError("baseline.channel_count: must be >= 1");
}

nlohmann::json BaselineConfig::to_json() const {
  return {{"kind", to_string(kind)},
          {"encoder",
           {{"embed_dim", encoder.embed_dim},
            {"num_heads", encoder.num_heads},
            {"num_layers", encoder.num_layers},
            {"feedforward_dim", encoder.feedforward_dim},
            {"max_len", encoder.max_len}}},
          {"channel_count", channel_count}};
}

BaselineConfig BaselineConfig::from_json(const nlohmann::json& j) {
  BaselineConfig c;
  c.kind = baseline_kind_from_string(j.at("kind").get<std::string>());
  const auto& e = j.at("encoder");
  c.encoder.embed_dim = e.at("embed_dim").get<int>();
  c.encoder.num_heads = e.at("num_heads").get<int>();
  c.encoder.num_layers = e.at("num_layers").get<int>();
  c.encoder.feedforward_dim = e.at("feedforward_dim").get<int>();
  c.encoder.max_len = e.at("max_len").get<int>();
  c.channel_count = j.at("channel_count").get<int>();
  return c;
}

LstmCell::LstmCell(nn::ParameterSet& params, const std::string& name, int in_dim, int h)
    : input(params, name + ".input", in_dim, 4 * h), hidden(params, name + ".hidden", h, 4 * h), hidden_dim(h) {}

void LstmCell::init(nn::ParameterSet& params, Rng& rng) const {
  input.init(params, rng);
  hidden.init(params, rng);
}

void LstmCell::step(nn::Graph& g, nn::Var x, nn::Var& h, nn::Var& c) const {
  auto& t = g.tape;
  const nn::Var gates = t.add(input(g, x), hidden(g, h));
  const int H = hidden_dim;
  const nn::Var i = t.sigmoid(t.slice_cols(gates, 0, H));
  const nn::Var f = t.sigmoid(t.slice_cols(gates, H, H));
  const nn::Var u = t.tanh(t.slice_cols(gates, 2 * H, H));
  const nn::Var o = t.sigmoid(t.slice_cols(gates, 3 * H, H));
  c = t.add(t.mul(f, c), t.mul(i, u));
  h = t.mul(o, t.tanh(c));
}

Seq2SeqBaseline::Seq2SeqBaseline(const BaselineConfig& config, std::uint64_t init_seed) : config_(config) {
  config.validate();
  const int in_dim = kLayoutDim + config.channel_count;
  const int d = config.encoder.embed_dim;
  Rng rng(init_seed);
  if (config.kind == BaselineKind::kRecurrent) {
    encoder_cell_ = LstmCell(params_, "baseline.encoder", in_dim, d);
    decoder_cell_ = LstmCell(params_, "baseline.decoder", d, d);
    output_ = nn::Linear(params_, "baseline.output", d, kLayoutDim);
    encoder_cell_.init(params_, rng);
    decoder_cell_.init(params_, rng);
    output_.init(params_, rng);
  } else {
    encoder_ = TransformerEncoder(params_, "baseline.encoder", in_dim, config.encoder);
    decoder_ = NoiseDecoder(params_, config.encoder, kLayoutDim, "baseline.decoder", false);
    encoder_.init(params_, rng);
    decoder_.init(params_, rng);
  }
  layout_norm_.mean.assign(kLayoutDim, 0.0);
  layout_norm_.scale.assign(kLayoutDim, 1.0);
  mobile_norm_.mean.assign(static_cast<std::size_t>(config.channel_count), 0.0);
  mobile_norm_.scale.assign(static_cast<std::size_t>(config.channel_count), 1.0);
}

void Seq2SeqBaseline::fit_normalization(const Dataset& train) {
  if (train.channel_count() != config_.channel_count) {
    throw ValidationError("dataset channel count differs from baseline channel count");
  }
  set_normalization(fit_layout_standardizer(train), fit_mobile_standardizer(train));
}

void Seq2SeqBaseline::set_normalization(Standardizer layout, Standardizer mobile) {
  layout_norm_ = std::move(layout);
  mobile_norm_ = std::move(mobile);
}

nn::Var Seq2SeqBaseline::forward(nn::Graph& g, const PreparedInput& input) const {
  auto& t = g.tape;
  const int rows = static_cast<int>(input.layout.rows());
  const nn::Var layout = t.constant(input.layout);
  const nn::Var x = t.concat_cols(layout, t.constant(input.mobile));
  if (config_.kind == BaselineKind::kAttention) {
    std::vector<int> positions(static_cast<std::size_t>(rows));
    std::iota(positions.begin(), positions.end(), 0);
    const nn::Var memory = encoder_.forward(g, x, positions);
    return decoder_.forward(g, layout, 0, memory);
  }
  const int H = encoder_cell_.hidden_dim;
  nn::Var h = t.constant(nn::Matrix::Zero(1, H));
  nn::Var c = t.constant(nn::Matrix::Zero(1, H));
  std::vector<nn::Var> encoded;
  encoded.reserve(static_cast<std::size_t>(rows));
  for (int r = 0; r < rows; ++r) {
    encoder_cell_.step(g, t.gather_rows(x, {r}), h, c);
    encoded.push_back(h);
  }
  std::vector<nn::Var> decoded;
  decoded.reserve(encoded.size());
  for (const nn::Var& e : encoded) {
    decoder_cell_.step(g, e, h, c);
    decoded.push_back(h);
  }
  return output_(g, t.stack_rows(decoded));
}

double Seq2SeqBaseline::sample_loss(const AgentSample& sample, const VisibilityMask& mask, Rng&,
                                    nn::GradientBuffer* grads) const {
  const PreparedInput input =
      prepare_input(layout_norm_, mobile_norm_, apply_mask(sample.layout, mask), sample.mobile, mask);
  nn::Tape tape(grads != nullptr);
  nn::Graph g{tape, params_};
  const nn::Var loss = tape.mse(forward(g, input), tape.constant(standardize_layout(layout_norm_, sample.layout)));
  if (grads) tape.backward(loss, grads);
  return tape.value(loss)(0, 0);
}

LayoutSequence Seq2SeqBaseline::predict(const PredictorInput& input, Rng&) const {
  const PreparedInput prepared = prepare_input(layout_norm_, mobile_norm_, input.masked_layout, input.mobile, input.mask);
  nn::Tape tape(false);
  nn::Graph g{tape, params_};
  return restore_layout(layout_norm_, tape.value(forward(g, prepared)));
}

nlohmann::json Seq2SeqBaseline::describe() const {
  return {{"kind", kind()},
          {"config", config_.to_json()},
          {"layout_norm", layout_norm_.to_json()},
          {"mobile_norm", mobile_norm_.to_json()}};
}

}  // namespace ltrajdiff
