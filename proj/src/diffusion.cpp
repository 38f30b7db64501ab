#include "ltrajdiff/diffusion.hpp"

#include <cmath>
#include <numeric>

#include "ltrajdiff/errors.hpp"

namespace ltrajdiff {

void DiffusionConfig::validate() const {
  if (K < 1) throw ConfigError("diffusion.K: must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw ConfigError("diffusion.beta_start/beta_end: need 0 < beta_start <= beta_end < 1");
  }
  if (!(lambda > 0.0)) throw ConfigError("diffusion.lambda: must be positive");
}

NoiseSchedule linear_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw ArgumentError("linear_schedule: K must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw ArgumentError("linear_schedule: need 0 < beta_start <= beta_end < 1");
  }
  NoiseSchedule s;
  const auto n = static_cast<std::size_t>(steps);
  s.betas.resize(n);
  s.alphas.resize(n);
  s.alpha_bars.resize(n);
  double running = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(steps - 1);
    s.betas[i] = beta_start + (beta_end - beta_start) * frac;
    s.alphas[i] = 1.0 - s.betas[i];
    running *= s.alphas[i];
    s.alpha_bars[i] = running;
  }
  return s;
}

namespace {

void check_step(int k, const NoiseSchedule& schedule, const char* op) {
  if (k < 1 || k > schedule.steps()) {
    throw ArgumentError(std::string(op) + ": step " + std::to_string(k) + " outside [1, " +
                        std::to_string(schedule.steps()) + "]");
  }
}

nn::Matrix standard_normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  nn::Matrix m(rows, cols);
  std::normal_distribution<double> n(0.0, 1.0);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

}  // namespace

nn::Matrix forward_diffuse(const nn::Matrix& y0, int k, const nn::Matrix& eps, const NoiseSchedule& schedule) {
  check_step(k, schedule, "forward_diffuse");
  if (y0.rows() != eps.rows() || y0.cols() != eps.cols()) throw ArgumentError("forward_diffuse: shape mismatch");
  const double ab = schedule.alpha_bar(k);
  return std::sqrt(ab) * y0 + std::sqrt(1.0 - ab) * eps;
}

NoiseDecoder::NoiseDecoder(nn::ParameterSet& params, const EncoderConfig& config, int output_dim,
                           const std::string& prefix, bool step_embedding, bool aligned_conditioning)
    : config_(config), step_embedding_(step_embedding), aligned_conditioning_(aligned_conditioning) {
  config.validate();
  const int d = config.embed_dim;
  input_ = nn::Linear(params, prefix + ".input", output_dim, d);
  if (step_embedding) time_ = nn::Linear(params, prefix + ".time", d, d);
  if (aligned_conditioning) condition_ = nn::Linear(params, prefix + ".condition", d, d);
  for (int l = 0; l < config.num_layers; ++l) {
    const std::string p = prefix + ".layer" + std::to_string(l);
    layers_.push_back(Layer{nn::MultiHeadAttention(params, p + ".self_attention", d, config.num_heads),
                            nn::LayerNorm(params, p + ".norm1", d),
                            nn::MultiHeadAttention(params, p + ".cross_attention", d, config.num_heads),
                            nn::LayerNorm(params, p + ".norm2", d),
                            nn::FeedForward(params, p + ".feed_forward", d, config.feedforward_dim),
                            nn::LayerNorm(params, p + ".norm3", d)});
  }
  output_ = nn::Linear(params, prefix + ".output", d, output_dim);
}

void NoiseDecoder::init(nn::ParameterSet& params, Rng& rng) const {
  input_.init(params, rng);
  if (step_embedding_) time_.init(params, rng);
  if (aligned_conditioning_) condition_.init(params, rng);
  for (const auto& l : layers_) {
    l.self_attention.init(params, rng);
    l.norm1.init(params);
    l.cross_attention.init(params, rng);
    l.norm2.init(params);
    l.feed_forward.init(params, rng);
    l.norm3.init(params);
  }
  output_.init(params, rng);
}

std::vector<nn::ParamRef> NoiseDecoder::cross_attention_params() const {
  std::vector<nn::ParamRef> out;
  for (const auto& l : layers_) {
    for (const nn::Linear* lin : {&l.cross_attention.query, &l.cross_attention.key, &l.cross_attention.value,
                                  &l.cross_attention.output}) {
      out.push_back(lin->weight);
      out.push_back(lin->bias);
    }
  }
  return out;
}

NoiseDecoder::Memory NoiseDecoder::memory(nn::Graph& g, nn::Var z) const {
  if (g.tape.value(z).cols() != config_.embed_dim) throw ArgumentError("decoder: conditioning width mismatch");
  Memory m;
  for (const auto& l : layers_) {
    m.key_values.emplace_back(l.cross_attention.key(g, z), l.cross_attention.value(g, z));
  }
  if (aligned_conditioning_) m.aligned = condition_(g, z);
  return m;
}

NoiseDecoder::Memory NoiseDecoder::memory(nn::Graph& g, const MemoryValues& values) const {
  Memory m;
  for (const auto& [k, v] : values.key_values) m.key_values.emplace_back(g.tape.constant(k), g.tape.constant(v));
  if (values.aligned.size() > 0) m.aligned = g.tape.constant(values.aligned);
  return m;
}

NoiseDecoder::MemoryValues NoiseDecoder::memory_values(const nn::ParameterSet& params, const nn::Matrix& z) const {
  nn::Tape tape(false);
  nn::Graph g{tape, params};
  const Memory m = memory(g, tape.constant(z));
  MemoryValues out;
  for (const auto& [k, v] : m.key_values) out.key_values.emplace_back(tape.value(k), tape.value(v));
  if (m.aligned.id >= 0) out.aligned = tape.value(m.aligned);
  return out;
}

nn::Var NoiseDecoder::forward(nn::Graph& g, nn::Var y_k, int k, const Memory& memory) const {
  auto& t = g.tape;
  const nn::Matrix& y = t.value(y_k);
  if (y.cols() != input_.in) throw ArgumentError("decoder: noisy input width mismatch");
  if (y.rows() > config_.max_len) throw ConfigError("decoder: sequence length exceeds max_len");
  if (memory.key_values.size() != layers_.size()) throw ArgumentError("decoder: memory/layer count mismatch");
  const int rows = static_cast<int>(y.rows());
  nn::Var x = t.add(input_(g, y_k), t.constant(nn::sinusoidal_encoding(rows, config_.embed_dim)));
  if (step_embedding_) {
    const int step[] = {k};
    x = t.add_row(x, time_(g, t.constant(nn::sinusoidal_encoding(step, config_.embed_dim))));
  }
  if (memory.aligned.id >= 0 && t.value(memory.aligned).rows() == rows) x = t.add(x, memory.aligned);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    x = l.norm1(g, t.add(x, l.self_attention(g, x, x)));
    const auto& [keys, values] = memory.key_values[i];
    x = l.norm2(g, t.add(x, l.cross_attention.attend(g, x, keys, values)));
    x = l.norm3(g, t.add(x, l.feed_forward(g, x)));
  }
  const nn::Var out = output_(g, x);
  if (alpha_bars_.empty()) return out;
  if (k < 1 || k > static_cast<int>(alpha_bars_.size())) throw ArgumentError("decoder: step outside schedule");
  const double ab = alpha_bars_[static_cast<std::size_t>(k - 1)];
  return t.add(t.scale(y_k, std::sqrt(1.0 - ab)), t.scale(out, std::sqrt(ab)));
}

nn::Matrix predict_noise(const NoiseDecoder& decoder, const nn::ParameterSet& params, const nn::Matrix& z, int k,
                         const nn::Matrix& y_k) {
  if (k < 1) throw ArgumentError("predict_noise: step must be >= 1");
  nn::Tape tape(false);
  nn::Graph g{tape, params};
  return tape.value(decoder.forward(g, tape.constant(y_k), k, tape.constant(z)));
}

double diffusion_loss(const nn::Matrix& eps_hat, const nn::Matrix& eps, double lambda) {
  if (eps_hat.rows() != eps.rows() || eps_hat.cols() != eps.cols()) {
    throw ArgumentError("diffusion_loss: shape mismatch");
  }
  return lambda * (eps_hat - eps).squaredNorm() / static_cast<double>(eps.size());
}

nn::Matrix denoise_step(const nn::Matrix& y_k, const nn::Matrix& eps_hat, int k, const NoiseSchedule& schedule,
                        Rng& rng, bool deterministic) {
  check_step(k, schedule, "denoise_step");
  const double beta = schedule.beta(k);
  const double coef = beta / std::sqrt(1.0 - schedule.alpha_bar(k));
  nn::Matrix out = (y_k - coef * eps_hat) / std::sqrt(schedule.alpha(k));
  if (k > 1 && !deterministic) out += std::sqrt(beta) * standard_normal_matrix(y_k.rows(), y_k.cols(), rng);
  return out;
}

nn::Matrix sample(const NoisePredictor& predictor, int rows, int cols, const NoiseSchedule& schedule, Rng& rng,
                  bool deterministic) {
  nn::Matrix y = standard_normal_matrix(rows, cols, rng);
  for (int k = schedule.steps(); k >= 1; --k) {
    const nn::Matrix eps_hat = predictor(y, k);
    y = denoise_step(y, eps_hat, k, schedule, rng, deterministic);
  }
  return y;
}

nn::Matrix sample(const NoiseDecoder& decoder, const nn::ParameterSet& params, const nn::Matrix& z,
                  const NoiseSchedule& schedule, Rng& rng, bool deterministic) {
  const auto memory = decoder.memory_values(params, z);
  const NoisePredictor predictor = [&](const nn::Matrix& y, int k) {
    nn::Tape tape(false);
    nn::Graph g{tape, params};
    return nn::Matrix(tape.value(decoder.forward(g, tape.constant(y), k, decoder.memory(g, memory))));
  };
  return sample(predictor, static_cast<int>(z.rows()), 5, schedule, rng, deterministic);
}

nn::Var diffusion_training_loss(nn::Graph& g, const NoiseDecoder& decoder, nn::Var z, const nn::Matrix& y0,
                                const NoiseSchedule& schedule, double lambda, Rng& rng, int* drawn_k) {
  std::uniform_int_distribution<int> pick(1, schedule.steps());
  const int k = pick(rng);
  if (drawn_k) *drawn_k = k;
  const nn::Matrix eps = standard_normal_matrix(y0.rows(), y0.cols(), rng);
  const nn::Var y_k = g.tape.constant(forward_diffuse(y0, k, eps, schedule));
  const nn::Var eps_hat = decoder.forward(g, y_k, k, z);
  return g.tape.scale(g.tape.mse(eps_hat, g.tape.constant(eps)), lambda);
}

DiffusionStepResult train_diffusion_step(const NoiseDecoder& decoder, const nn::ParameterSet& params,
                                         const nn::Matrix& z, const nn::Matrix& y0, const NoiseSchedule& schedule,
                                         double lambda, Rng& rng) {
  nn::Tape tape;
  nn::Graph g{tape, params};
  DiffusionStepResult r;
  r.grads = nn::GradientBuffer(params);
  const nn::Var zv = tape.leaf(z);
  const nn::Var loss = diffusion_training_loss(g, decoder, zv, y0, schedule, lambda, rng, &r.k);
  tape.backward(loss, &r.grads);
  r.loss = tape.value(loss)(0, 0);
  r.z_grad = tape.grad(zv);
  if (r.z_grad.size() == 0) r.z_grad = nn::Matrix::Zero(z.rows(), z.cols());
  return r;
}

}  // namespace ltrajdiff
