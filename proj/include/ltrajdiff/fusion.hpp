#pragma once

#include <string>

#include "ltrajdiff/nn/layers.hpp"

namespace ltrajdiff {

// softplus keeps the scale positive; raw uses the linear output as-is.
enum class SigmaMode { kSoftplus, kRaw };

const char* to_string(SigmaMode mode);
SigmaMode sigma_mode_from_string(const std::string& name);

// Per timestamp: (mu_t, s_t) = f(e_t); sigma_t = softplus(s_t);
// z_t = sigma_t * g(o) + mu_t.
class ModalityFusionModule {
 public:
  ModalityFusionModule() = default;
  ModalityFusionModule(nn::ParameterSet& params, int embed_dim, SigmaMode mode);

  void init(nn::ParameterSet& params, Rng& rng) const;
  nn::Var forward(nn::Graph& g, nn::Var temporal, nn::Var layout_embedding) const;

  // Pieces used by the ablation variants.
  nn::Var mean_branch(nn::Graph& g, nn::Var temporal) const;
  nn::Var layout_branch(nn::Graph& g, nn::Var layout_embedding) const { return g_(g, layout_embedding); }

  const nn::Linear& f() const { return f_; }
  const nn::Linear& g() const { return g_; }
  SigmaMode mode() const { return mode_; }

 private:
  int dim_ = 0;
  SigmaMode mode_ = SigmaMode::kSoftplus;
  nn::Linear f_;  // D -> 2D
  nn::Linear g_;  // D -> D
};

nn::Matrix mfm_forward(const ModalityFusionModule& mfm, const nn::ParameterSet& params, const nn::Matrix& temporal,
                       const nn::Matrix& layout_embedding);

}  // namespace ltrajdiff
