#include "ltrajdiff/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ltrajdiff/errors.hpp"

namespace ltrajdiff {

std::size_t VisibilityMask::visible_count() const {
  return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), std::uint8_t{1}));
}

const char* to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Split split_from_string(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw ArgumentError("unknown split '" + name + "'");
}

LayoutSequence apply_mask(const LayoutSequence& layout, const VisibilityMask& mask) {
  if (layout.size() != mask.size()) {
    throw ValidationError("apply_mask: length mismatch (layout " + std::to_string(layout.size()) +
                          ", mask " + std::to_string(mask.size()) + ")");
  }
  LayoutSequence out = layout;
  for (std::size_t t = 0; t < out.size(); ++t) {
    if (mask.flags[t] == 0) out.frames[t] = LayoutFrame{};
  }
  return out;
}

std::vector<int> visible_timestamps(const VisibilityMask& mask) {
  std::vector<int> out;
  out.reserve(mask.size());
  for (std::size_t t = 0; t < mask.size(); ++t) {
    if (mask.flags[t] == 1) out.push_back(static_cast<int>(t));
  }
  return out;
}

void check_mask(const VisibilityMask& mask) {
  bool any = false;
  for (auto f : mask.flags) {
    if (f > 1) throw ValidationError("mask flag outside {0,1}");
    any = any || f == 1;
  }
  if (!any) throw ValidationError("empty mask: no visible timestamp");
}

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

ValidationResult validate_sample(const AgentSample& sample) {
  ValidationResult result;
  auto& v = result.violations;
  const std::size_t t_len = sample.layout.size();
  if (t_len == 0) v.emplace_back("empty layout");
  if (sample.mobile.channel_count < 1) v.emplace_back("channel count < 1");
  if (sample.mobile.channel_count > 0 &&
      sample.mobile.samples.size() % static_cast<std::size_t>(sample.mobile.channel_count) != 0) {
    v.emplace_back("mobile matrix not rectangular");
  }
  if (sample.mobile.size() != t_len) v.emplace_back("length mismatch");
  if (!all_finite(sample.mobile.samples)) v.emplace_back("non-finite mobile value");

  bool non_finite = false, neg_w = false, neg_h = false, bad_d = false;
  const bool use_mask = sample.mask && sample.mask->size() == t_len;
  for (std::size_t t = 0; t < t_len; ++t) {
    const auto& f = sample.layout.frames[t];
    const auto a = f.to_array();
    if (!all_finite(a)) {
      non_finite = true;
      continue;
    }
    if (use_mask && sample.mask->flags[t] == 0) continue;  // hidden frames are zero-filled
    neg_w = neg_w || f.w < 0.0;
    neg_h = neg_h || f.h < 0.0;
    bad_d = bad_d || f.d <= 0.0;
  }
  if (non_finite) v.emplace_back("non-finite layout value");
  if (neg_w) v.emplace_back("negative width");
  if (neg_h) v.emplace_back("negative height");
  if (bad_d) v.emplace_back("non-positive depth");

  if (sample.mask) {
    const auto& m = *sample.mask;
    if (m.size() != t_len) v.emplace_back("mask length mismatch");
    if (std::any_of(m.flags.begin(), m.flags.end(), [](auto f) { return f > 1; })) {
      v.emplace_back("mask flag outside {0,1}");
    }
    if (m.visible_count() == 0) v.emplace_back("empty mask");
  }
  return result;
}

void validate_dataset(const Dataset& dataset) {
  if (dataset.samples.empty()) throw ValidationError("dataset is empty");
  const int channels = dataset.channel_count();
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const auto& s = dataset.samples[i];
    auto res = validate_sample(s);
    if (s.mobile.channel_count != channels) res.violations.emplace_back("channel count differs from dataset");
    if (!res.ok()) {
      std::string msg = "sample " + std::to_string(i) + " (" + s.agent_id + "):";
      for (const auto& e : res.violations) msg += " " + e + ";";
      throw ValidationError(msg);
    }
  }
}

}  // namespace ltrajdiff
