#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "ltrajdiff/core.hpp"
#include "ltrajdiff/metrics.hpp"
#include "ltrajdiff/nn/tape.hpp"

namespace ltrajdiff {

// Per-channel affine standardization fitted on the training split.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  bool fitted() const { return !mean.empty(); }
  std::size_t dim() const { return mean.size(); }
  double forward(std::size_t c, double v) const { return (v - mean[c]) / scale[c]; }
  double inverse(std::size_t c, double v) const { return v * scale[c] + mean[c]; }

  nlohmann::json to_json() const;
  static Standardizer from_json(const nlohmann::json& j);
  friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

Standardizer fit_layout_standardizer(const Dataset& dataset);
Standardizer fit_mobile_standardizer(const Dataset& dataset);

// Model-space inputs shared by every learned predictor.
struct PreparedInput {
  nn::Matrix layout;  // T x 5, standardized visible rows, zero rows where hidden
  nn::Matrix mobile;  // T x C, standardized
  VisibilityMask mask;
};

PreparedInput prepare_input(const Standardizer& layout_norm, const Standardizer& mobile_norm,
                            const LayoutSequence& masked_layout, const MobileSignalSequence& mobile,
                            const VisibilityMask& mask);
nn::Matrix standardize_layout(const Standardizer& layout_norm, const LayoutSequence& layout);
LayoutSequence restore_layout(const Standardizer& layout_norm, const nn::Matrix& standardized);

// A predictor that can be trained by the shared training loop.
class TrainableModel : public LayoutPredictor {
 public:
  virtual std::string kind() const = 0;
  virtual nn::ParameterSet& parameters() = 0;
  virtual const nn::ParameterSet& parameters() const = 0;

  // Fits input/output standardization on the training split.
  virtual void fit_normalization(const Dataset& train) = 0;

  // Forward + backward for one sample under the given training mask; adds the
  // parameter gradient into grads (when non-null) and returns the loss.
  virtual double sample_loss(const AgentSample& sample, const VisibilityMask& mask, Rng& rng,
                             nn::GradientBuffer* grads) const = 0;

  // Training masks ignore the requested spec (full visibility) when true.
  virtual bool trains_with_full_visibility() const { return false; }

  // Everything needed to rebuild the model except tensors.
  virtual nlohmann::json describe() const = 0;
};

}  // namespace ltrajdiff
