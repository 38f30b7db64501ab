#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ltrajdiff/core.hpp"
#include "ltrajdiff/masking.hpp"
#include "ltrajdiff/rng.hpp"

namespace ltrajdiff {

// agreement: depth factor 1 - |d - d'| / max(d, d'), so a perfect prediction
// scores 1. paper_literal: the factor |d - d'| / max(d, d'), which
// scores a perfect prediction 0.
enum class IouDepthMode { kAgreement, kPaperLiteral };

const char* to_string(IouDepthMode mode);
IouDepthMode iou_depth_mode_from_string(const std::string& name);

// Mean over timestamps of the squared Euclidean error on the 5-vector.
double mse_t(const LayoutSequence& truth, const LayoutSequence& pred);

// Axis-aligned box IoU from the (x, y, w, h) part; 0 for degenerate unions.
double box_iou(const LayoutFrame& a, const LayoutFrame& b);

double iou_d_frame(const LayoutFrame& truth, const LayoutFrame& pred,
                   IouDepthMode mode = IouDepthMode::kAgreement);

double iou_d(const LayoutSequence& truth, const LayoutSequence& pred,
             IouDepthMode mode = IouDepthMode::kAgreement);

// Grid-counting IoU over the joint bounding extent, cell centers tested
// against each box. Independent of box_iou.
double rasterize_iou_oracle(const LayoutFrame& a, const LayoutFrame& b, int grid_resolution);

struct SampleScore {
  std::string agent_id;
  double mse_t = 0.0;
  double iou_d = 0.0;
  double iou_d_paper_literal = 0.0;
  std::string error;  // non-empty when prediction failed
  LayoutSequence truth;
  LayoutSequence pred;
  VisibilityMask mask;
};

struct EvalReport {
  double mse_t = 0.0;
  double iou_d = 0.0;                // in the configured mode
  double iou_d_paper_literal = 0.0;  // always reported for reference
  IouDepthMode iou_d_mode = IouDepthMode::kAgreement;
  std::string mask_spec;
  std::size_t failures = 0;
  std::vector<SampleScore> per_sample;
};

// What a predictor may see: the masked layout, the mobile stream and the mask.
struct PredictorInput {
  const std::string& agent_id;
  const LayoutSequence& masked_layout;
  const MobileSignalSequence& mobile;
  const VisibilityMask& mask;
};

class LayoutPredictor {
 public:
  virtual ~LayoutPredictor() = default;
  virtual LayoutSequence predict(const PredictorInput& input, Rng& rng) const = 0;
};

// Returns the ground truth looked up by agent id.
class OraclePredictor : public LayoutPredictor {
 public:
  explicit OraclePredictor(const Dataset& dataset);
  LayoutSequence predict(const PredictorInput& input, Rng& rng) const override;

 private:
  std::map<std::string, LayoutSequence> truth_;
};

class ZeroPredictor : public LayoutPredictor {
 public:
  LayoutSequence predict(const PredictorInput& input, Rng& rng) const override;
};

// Repeats the first visible frame at every timestamp.
class CopyFirstVisiblePredictor : public LayoutPredictor {
 public:
  LayoutSequence predict(const PredictorInput& input, Rng& rng) const override;
};

struct EvalOptions {
  MaskSpec mask;
  IouDepthMode iou_d_mode = IouDepthMode::kAgreement;
  std::uint64_t seed = 0;        // mask stream
  std::optional<std::uint64_t> sampling_seed;  // predictor stream, default seed+1
  std::size_t max_samples = 0;   // 0 = all
  bool keep_sequences = true;    // store truth/pred/mask per sample
};

// Per-sample masks and sampling streams are derived from (seed, index), so the
// result does not depend on thread count. Aggregation is a fixed-order mean.
EvalReport evaluate(const LayoutPredictor& predictor, const Dataset& dataset, const EvalOptions& options);
EvalReport evaluate_serial(const LayoutPredictor& predictor, const Dataset& dataset,
                           const EvalOptions& options);

}  // namespace ltrajdiff
