#include "ltrajdiff/fusion.hpp"

#include "ltrajdiff/errors.hpp"

namespace ltrajdiff {

const char* to_string(SigmaMode mode) { return mode == SigmaMode::kSoftplus ? "softplus" : "raw"; }

SigmaMode sigma_mode_from_string(const std::string& name) {
  if (name == "softplus") return SigmaMode::kSoftplus;
  if (name == "raw") return SigmaMode::kRaw;
  throw ArgumentError("unknown fusion.sigma_mode '" + name + "'");
}

ModalityFusionModule::ModalityFusionModule(nn::ParameterSet& params, int embed_dim, SigmaMode mode)
    : dim_(embed_dim),
      mode_(mode),
      f_(params, "fusion.f", embed_dim, 2 * embed_dim),
      g_(params, "fusion.g", embed_dim, embed_dim) {}

void ModalityFusionModule::init(nn::ParameterSet& params, Rng& rng) const {
  f_.init(params, rng);
  g_.init(params, rng);
}

nn::Var ModalityFusionModule::mean_branch(nn::Graph& g, nn::Var temporal) const {
  return g.tape.slice_cols(f_(g, temporal), 0, dim_);
}

nn::Var ModalityFusionModule::forward(nn::Graph& g, nn::Var temporal, nn::Var layout_embedding) const {
  const auto rows = static_cast<int>(g.tape.value(temporal).rows());
  const auto& e = g.tape.value(temporal);
  const auto& o = g.tape.value(layout_embedding);
  if (e.cols() != dim_ || o.rows() != 1 || o.cols() != dim_) throw ArgumentError("mfm: dimension mismatch");
  auto& t = g.tape;
  const nn::Var stats = f_(g, temporal);
  const nn::Var mu = t.slice_cols(stats, 0, dim_);
  nn::Var sigma = t.slice_cols(stats, dim_, dim_);
  if (mode_ == SigmaMode::kSoftplus) sigma = t.softplus(sigma);
  const nn::Var go = t.broadcast_rows(g_(g, layout_embedding), rows);
  return t.add(t.mul(sigma, go), mu);
}

nn::Matrix mfm_forward(const ModalityFusionModule& mfm, const nn::ParameterSet& params, const nn::Matrix& temporal,
                       const nn::Matrix& layout_embedding) {
  nn::Tape tape(false);
  nn::Graph g{tape, params};
  return tape.value(mfm.forward(g, tape.constant(temporal), tape.constant(layout_embedding)));
}

}  // namespace ltrajdiff
