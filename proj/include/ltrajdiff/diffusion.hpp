#pragma once

#include <functional>
#include <vector>

#include "ltrajdiff/encoders.hpp"
#include "ltrajdiff/nn/layers.hpp"
#include "ltrajdiff/rng.hpp"

namespace ltrajdiff {

struct DiffusionConfig {
  int K = 100;
  double beta_start = 1e-4;
  double beta_end = 0.2;
  double lambda = 1.0;
  bool deterministic_sampling = false;

  void validate() const;
  friend bool operator==(const DiffusionConfig&, const DiffusionConfig&) = default;
};

// Step k in [1, K] lives at index k - 1.
struct NoiseSchedule {
  std::vector<double> betas;
  std::vector<double> alphas;
  std::vector<double> alpha_bars;

  int steps() const { return static_cast<int>(betas.size()); }
  double beta(int k) const { return betas[static_cast<std::size_t>(k - 1)]; }
  double alpha(int k) const { return alphas[static_cast<std::size_t>(k - 1)]; }
  double alpha_bar(int k) const { return alpha_bars[static_cast<std::size_t>(k - 1)]; }
};

// Linearly spaced betas (inclusive ends), alpha = 1 - beta, alpha_bar the
// running product.
NoiseSchedule linear_schedule(int steps, double beta_start, double beta_end);

// sqrt(alpha_bar_k) * y0 + sqrt(1 - alpha_bar_k) * eps.
nn::Matrix forward_diffuse(const nn::Matrix& y0, int k, const nn::Matrix& eps, const NoiseSchedule& schedule);

// Transformer decoder predicting the injected noise: input projection of y_k,
// position code, learned projection of a sinusoidal step code, a per-timestamp
// projection of z (when its rows line up with y_k), then layers of
// [self-attention, norm, cross-attention to z, norm, feed-forward, norm],
// output projection to 5 channels.
class NoiseDecoder {
 public:
  // Per-layer projected keys/values of the conditioning sequence.
  struct Memory {
    std::vector<std::pair<nn::Var, nn::Var>> key_values;
    nn::Var aligned;  // T x D projection of z added to the input embedding
  };
  struct MemoryValues {
    std::vector<std::pair<nn::Matrix, nn::Matrix>> key_values;
    nn::Matrix aligned;
  };

  NoiseDecoder() = default;
  NoiseDecoder(nn::ParameterSet& params, const EncoderConfig& config, int output_dim = 5,
               const std::string& prefix = "decoder", bool step_embedding = true, bool aligned_conditioning = true);

  void init(nn::ParameterSet& params, Rng& rng) const;

  Memory memory(nn::Graph& g, nn::Var z) const;
  Memory memory(nn::Graph& g, const MemoryValues& values) const;
  MemoryValues memory_values(const nn::ParameterSet& params, const nn::Matrix& z) const;

  nn::Var forward(nn::Graph& g, nn::Var y_k, int k, const Memory& memory) const;
  nn::Var forward(nn::Graph& g, nn::Var y_k, int k, nn::Var z) const { return forward(g, y_k, k, memory(g, z)); }

  const EncoderConfig& config() const { return config_; }
  // With a schedule attached the network output F is combined as
  // eps_hat = sqrt(1 - alpha_bar_k) * y_k + sqrt(alpha_bar_k) * F.
  void attach_schedule(const NoiseSchedule& schedule) { alpha_bars_ = schedule.alpha_bars; }
  bool preconditioned() const { return !alpha_bars_.empty(); }
  // Parameter names of every cross-attention projection.
  std::vector<nn::ParamRef> cross_attention_params() const;

 private:
  struct Layer {
    nn::MultiHeadAttention self_attention;
    nn::LayerNorm norm1;
    nn::MultiHeadAttention cross_attention;
    nn::LayerNorm norm2;
    nn::FeedForward feed_forward;
    nn::LayerNorm norm3;
  };

  EncoderConfig config_;
  bool step_embedding_ = true;
  bool aligned_conditioning_ = true;
  nn::Linear input_;
  nn::Linear condition_;
  nn::Linear time_;
  std::vector<Layer> layers_;
  nn::Linear output_;
  std::vector<double> alpha_bars_;
};

nn::Matrix predict_noise(const NoiseDecoder& decoder, const nn::ParameterSet& params, const nn::Matrix& z, int k,
                         const nn::Matrix& y_k);

// lambda * mean((eps_hat - eps)^2).
double diffusion_loss(const nn::Matrix& eps_hat, const nn::Matrix& eps, double lambda);

// DDPM ancestral update. sigma_k = sqrt(beta_k) for k > 1 and 0 for k = 1;
// deterministic suppresses the injected noise at every step.
nn::Matrix denoise_step(const nn::Matrix& y_k, const nn::Matrix& eps_hat, int k, const NoiseSchedule& schedule,
                        Rng& rng, bool deterministic = false);

using NoisePredictor = std::function<nn::Matrix(const nn::Matrix& y_k, int k)>;

// y_K ~ N(0, I); for k = K..1: y <- denoise_step(y, predictor(y, k), k).
nn::Matrix sample(const NoisePredictor& predictor, int rows, int cols, const NoiseSchedule& schedule, Rng& rng,
                  bool deterministic = false);

nn::Matrix sample(const NoiseDecoder& decoder, const nn::ParameterSet& params, const nn::Matrix& z,
                  const NoiseSchedule& schedule, Rng& rng, bool deterministic = false);

// Draws k ~ U{1..K} and eps ~ N(0, I), returns the loss node on the graph.
nn::Var diffusion_training_loss(nn::Graph& g, const NoiseDecoder& decoder, nn::Var z, const nn::Matrix& y0,
                                const NoiseSchedule& schedule, double lambda, Rng& rng, int* drawn_k = nullptr);

struct DiffusionStepResult {
  double loss = 0.0;
  int k = 0;
  nn::GradientBuffer grads;  // w.r.t. decoder parameters
  nn::Matrix z_grad;         // w.r.t. the conditioning sequence
};

DiffusionStepResult train_diffusion_step(const NoiseDecoder& decoder, const nn::ParameterSet& params,
                                         const nn::Matrix& z, const nn::Matrix& y0, const NoiseSchedule& schedule,
                                         double lambda, Rng& rng);

}  // namespace ltrajdiff
