#include "ltrajdiff/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "ltrajdiff/errors.hpp"

namespace ltrajdiff {

const char* to_string(IouDepthMode mode) {
  return mode == IouDepthMode::kAgreement ? "agreement" : "paper_literal";
}

IouDepthMode iou_depth_mode_from_string(const std::string& name) {
  if (name == "agreement") return IouDepthMode::kAgreement;
  if (name == "paper_literal") return IouDepthMode::kPaperLiteral;
  throw ArgumentError("unknown iou_d mode '" + name + "'");
}

double mse_t(const LayoutSequence& truth, const LayoutSequence& pred) {
  if (truth.size() != pred.size() || truth.size() == 0) {
    throw ArgumentError("mse_t: length mismatch");
  }
  double total = 0.0;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    const auto a = truth[t].to_array();
    const auto b = pred[t].to_array();
    for (int c = 0; c < kLayoutDim; ++c) {
      const double diff = a[c] - b[c];
      total += diff * diff;
    }
  }
  return total / static_cast<double>(truth.size());
}

namespace {

double overlap_1d(double a0, double a_len, double b0, double b_len) {
  return std::max(0.0, std::min(a0 + a_len, b0 + b_len) - std::max(a0, b0));
}

}  // namespace

double box_iou(const LayoutFrame& a, const LayoutFrame& b) {
  if (a.w <= 0.0 || a.h <= 0.0 || b.w <= 0.0 || b.h <= 0.0) return 0.0;
  const double l1 = overlap_1d(a.x, a.w, b.x, b.w);
  const double l2 = overlap_1d(a.y, a.h, b.y, b.h);
  const double inter = l1 * l2;
  const double area_a = ((a.x + a.w) - a.x) * ((a.y + a.h) - a.y);
  const double area_b = ((b.x + b.w) - b.x) * ((b.y + b.h) - b.y);
  const double uni = area_a + area_b - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double iou_d_frame(const LayoutFrame& truth, const LayoutFrame& pred, IouDepthMode mode) {
  const double max_d = std::max(truth.d, pred.d);
  if (!(max_d > 0.0)) throw ArgumentError("iou_d_frame: non-positive max depth");
  // A non-positive predicted depth makes rel exceed 1.
  const double rel = std::min(1.0, std::abs(truth.d - pred.d) / max_d);
  const double factor = mode == IouDepthMode::kAgreement ? 1.0 - rel : rel;
  return box_iou(truth, pred) * factor;
}

double iou_d(const LayoutSequence& truth, const LayoutSequence& pred, IouDepthMode mode) {
  if (truth.size() != pred.size() || truth.size() == 0) {
    throw ArgumentError("iou_d: length mismatch");
  }
  double total = 0.0;
  for (std::size_t t = 0; t < truth.size(); ++t) total += iou_d_frame(truth[t], pred[t], mode);
  return total / static_cast<double>(truth.size());
}

double rasterize_iou_oracle(const LayoutFrame& a, const LayoutFrame& b, int grid_resolution) {
  if (grid_resolution < 1) throw ArgumentError("rasterize_iou_oracle: resolution must be positive");
  const double x0 = std::min(a.x, b.x), x1 = std::max(a.x + a.w, b.x + b.w);
  const double y0 = std::min(a.y, b.y), y1 = std::max(a.y + a.h, b.y + b.h);
  if (!(x1 > x0) || !(y1 > y0)) return 0.0;
  const double cw = (x1 - x0) / grid_resolution;
  const double ch = (y1 - y0) / grid_resolution;
  auto inside = [](const LayoutFrame& f, double px, double py) {
    return px >= f.x && px < f.x + f.w && py >= f.y && py < f.y + f.h;
  };
  long long both = 0, either = 0;
  for (int i = 0; i < grid_resolution; ++i) {
    const double px = x0 + (i + 0.5) * cw;
    for (int j = 0; j < grid_resolution; ++j) {
      const double py = y0 + (j + 0.5) * ch;
      const bool ia = inside(a, px, py);
      const bool ib = inside(b, px, py);
      both += (ia && ib) ? 1 : 0;
      either += (ia || ib) ? 1 : 0;
    }
  }
  return either > 0 ? static_cast<double>(both) / static_cast<double>(either) : 0.0;
}

OraclePredictor::OraclePredictor(const Dataset& dataset) {
  for (const auto& s : dataset.samples) truth_[s.agent_id] = s.layout;
}

LayoutSequence OraclePredictor::predict(const PredictorInput& input, Rng&) const {
  auto it = truth_.find(input.agent_id);
  if (it == truth_.end()) throw ArgumentError("oracle: unknown agent '" + input.agent_id + "'");
  return it->second;
}

LayoutSequence ZeroPredictor::predict(const PredictorInput& input, Rng&) const {
  LayoutSequence out;
  out.frames.assign(input.masked_layout.size(), LayoutFrame{});
  return out;
}

LayoutSequence CopyFirstVisiblePredictor::predict(const PredictorInput& input, Rng&) const {
  const auto visible = visible_timestamps(input.mask);
  if (visible.empty()) throw ValidationError("copy-first-visible: empty mask");
  LayoutSequence out;
  out.frames.assign(input.masked_layout.size(), input.masked_layout[static_cast<std::size_t>(visible.front())]);
  return out;
}

namespace {

SampleScore score_sample(const LayoutPredictor& predictor, const AgentSample& sample, std::size_t index,
                         const EvalOptions& options) {
  SampleScore score;
  score.agent_id = sample.agent_id;
  try {
    const int length = static_cast<int>(sample.layout.size());
    Rng mask_rng = make_rng(options.seed, {index});
    const VisibilityMask mask = make_mask(options.mask, length, mask_rng);
    const LayoutSequence masked = apply_mask(sample.layout, mask);
    Rng sample_rng = make_rng(options.sampling_seed.value_or(options.seed + 1), {index});
    const PredictorInput input{sample.agent_id, masked, sample.mobile, mask};
    LayoutSequence pred = predictor.predict(input, sample_rng);
    score.mse_t = mse_t(sample.layout, pred);
    score.iou_d = iou_d(sample.layout, pred, options.iou_d_mode);
    score.iou_d_paper_literal = iou_d(sample.layout, pred, IouDepthMode::kPaperLiteral);
    if (!std::isfinite(score.mse_t)) throw NumericError("non-finite prediction");
    if (options.keep_sequences) {
      score.truth = sample.layout;
      score.pred = std::move(pred);
      score.mask = mask;
    }
  } catch (const std::exception& e) {
    score.error = e.what();
  }
  return score;
}

EvalReport aggregate(std::vector<SampleScore> scores, const EvalOptions& options) {
  EvalReport report;
  report.iou_d_mode = options.iou_d_mode;
  report.mask_spec = options.mask.to_string();
  std::size_t ok = 0;
  for (const auto& s : scores) {
    if (!s.error.empty()) {
      ++report.failures;
      continue;
    }
    report.mse_t += s.mse_t;
    report.iou_d += s.iou_d;
    report.iou_d_paper_literal += s.iou_d_paper_literal;
    ++ok;
  }
  if (ok > 0) {
    report.mse_t /= static_cast<double>(ok);
    report.iou_d /= static_cast<double>(ok);
    report.iou_d_paper_literal /= static_cast<double>(ok);
  } else {
    report.mse_t = report.iou_d = report.iou_d_paper_literal = std::nan("");
  }
  report.per_sample = std::move(scores);
  return report;
}

std::size_t sample_budget(const Dataset& dataset, const EvalOptions& options) {
  return options.max_samples == 0 ? dataset.size() : std::min(dataset.size(), options.max_samples);
}

}  // namespace

EvalReport evaluate(const LayoutPredictor& predictor, const Dataset& dataset, const EvalOptions& options) {
  const auto n = static_cast<long long>(sample_budget(dataset, options));
  std::vector<SampleScore> scores(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    scores[idx] = score_sample(predictor, dataset.samples[idx], idx, options);
  }
  return aggregate(std::move(scores), options);
}

EvalReport evaluate_serial(const LayoutPredictor& predictor, const Dataset& dataset,
                           const EvalOptions& options) {
  const std::size_t n = sample_budget(dataset, options);
  std::vector<SampleScore> scores;
  scores.reserve(n);
  for (std::size_t i = 0; i < n; ++i) scores.push_back(score_sample(predictor, dataset.samples[i], i, options));
  return aggregate(std::move(scores), options);
}

}  // namespace ltrajdiff
