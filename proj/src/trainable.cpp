#include "ltrajdiff/trainable.hpp"

#include <cmath>

#include "ltrajdiff/errors.hpp"

namespace ltrajdiff {

nlohmann::json Standardizer::to_json() const { return {{"mean", mean}, {"scale", scale}}; }

Standardizer Standardizer::from_json(const nlohmann::json& j) {
  Standardizer s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.scale = j.at("scale").get<std::vector<double>>();
  if (s.mean.size() != s.scale.size()) throw ParseError("standardizer: mean/scale size mismatch");
  return s;
}

namespace {

constexpr double kMinScale = 1e-8;

Standardizer finish(std::vector<double> sum, std::vector<double> sum_sq, double count) {
  Standardizer s;
  s.mean.resize(sum.size());
  s.scale.resize(sum.size());
  for (std::size_t c = 0; c < sum.size(); ++c) {
    const double m = sum[c] / count;
    const double var = std::max(0.0, sum_sq[c] / count - m * m);
    s.mean[c] = m;
    s.scale[c] = std::sqrt(var) > kMinScale ? std::sqrt(var) : 1.0;
  }
  return s;
}

}  // namespace

Standardizer fit_layout_standardizer(const Dataset& dataset) {
  if (dataset.samples.empty()) throw ValidationError("cannot fit standardizer on an empty dataset");
  std::vector<double> sum(kLayoutDim, 0.0), sq(kLayoutDim, 0.0);
  double count = 0.0;
  for (const auto& s : dataset.samples) {
    for (const auto& f : s.layout.frames) {
      const auto a = f.to_array();
      for (int c = 0; c < kLayoutDim; ++c) {
        sum[c] += a[c];
        sq[c] += a[c] * a[c];
      }
      count += 1.0;
    }
  }
  return finish(std::move(sum), std::move(sq), count);
}

Standardizer fit_mobile_standardizer(const Dataset& dataset) {
  if (dataset.samples.empty()) throw ValidationError("cannot fit standardizer on an empty dataset");
  const int channels = dataset.channel_count();
  std::vector<double> sum(static_cast<std::size_t>(channels), 0.0), sq(static_cast<std::size_t>(channels), 0.0);
  double count = 0.0;
  for (const auto& s : dataset.samples) {
    for (std::size_t t = 0; t < s.mobile.size(); ++t) {
      for (int c = 0; c < channels; ++c) {
        const double v = s.mobile.at(t, c);
        sum[static_cast<std::size_t>(c)] += v;
        sq[static_cast<std::size_t>(c)] += v * v;
      }
      count += 1.0;
    }
  }
  return finish(std::move(sum), std::move(sq), count);
}

PreparedInput prepare_input(const Standardizer& layout_norm, const Standardizer& mobile_norm,
                            const LayoutSequence& masked_layout, const MobileSignalSequence& mobile,
                            const VisibilityMask& mask) {
  const auto n = static_cast<Eigen::Index>(masked_layout.size());
  if (mobile.size() != masked_layout.size() || mask.size() != masked_layout.size()) {
    throw ValidationError("prepare_input: length mismatch");
  }
  if (static_cast<std::size_t>(mobile.channel_count) != mobile_norm.dim()) {
    throw ValidationError("prepare_input: channel count differs from the fitted model");
  }
  check_mask(mask);
  PreparedInput p;
  p.layout = nn::Matrix::Zero(n, kLayoutDim);
  p.mobile = nn::Matrix(n, mobile.channel_count);
  for (Eigen::Index t = 0; t < n; ++t) {
    const auto ts = static_cast<std::size_t>(t);
    if (mask.flags[ts]) {
      const auto a = masked_layout[ts].to_array();
      for (int c = 0; c < kLayoutDim; ++c) p.layout(t, c) = layout_norm.forward(static_cast<std::size_t>(c), a[c]);
    }
    for (int c = 0; c < mobile.channel_count; ++c) {
      p.mobile(t, c) = mobile_norm.forward(static_cast<std::size_t>(c), mobile.at(ts, c));
    }
  }
  p.mask = mask;
  return p;
}

nn::Matrix standardize_layout(const Standardizer& layout_norm, const LayoutSequence& layout) {
  nn::Matrix m(static_cast<Eigen::Index>(layout.size()), kLayoutDim);
  for (std::size_t t = 0; t < layout.size(); ++t) {
    const auto a = layout[t].to_array();
    for (int c = 0; c < kLayoutDim; ++c) {
      m(static_cast<Eigen::Index>(t), c) = layout_norm.forward(static_cast<std::size_t>(c), a[c]);
    }
  }
  return m;
}

LayoutSequence restore_layout(const Standardizer& layout_norm, const nn::Matrix& standardized) {
  LayoutSequence out;
  out.frames.reserve(static_cast<std::size_t>(standardized.rows()));
  for (Eigen::Index t = 0; t < standardized.rows(); ++t) {
    std::array<double, kLayoutDim> a{};
    for (int c = 0; c < kLayoutDim; ++c) a[c] = layout_norm.inverse(static_cast<std::size_t>(c), standardized(t, c));
    out.frames.push_back(LayoutFrame::from_array(a));
  }
  return out;
}

}  // namespace ltrajdiff
