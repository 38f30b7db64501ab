#pragma once

#include <string>
#include <utility>

#include "ltrajdiff/core.hpp"
#include "ltrajdiff/rng.hpp"

namespace ltrajdiff {

enum class MaskKind { kRandomRatio, kFixedRatio, kPrefix, kFull };

struct MaskSpec {
  MaskKind kind = MaskKind::kRandomRatio;
  double ratio = 0.0;  // kFixedRatio only
  int prefix_len = 1;  // kPrefix only

  // "random", "full", "fixed:<r>", "prefix:<k>".
  static MaskSpec parse(const std::string& text);
  std::string to_string() const;
  friend bool operator==(const MaskSpec&, const MaskSpec&) = default;
};

// Random Mask Strategy: r ~ U(0,1), floor(T*r) hidden frames (at most T-1),
// positions uniformly shuffled. Returns the mask and the drawn ratio.
std::pair<VisibilityMask, double> random_mask(int length, Rng& rng);

// Same construction with r held fixed: exactly max(1, T - floor(T*r)) ones.
VisibilityMask fixed_ratio_mask(int length, double ratio, Rng& rng);

// First k frames visible, the rest hidden.
VisibilityMask prefix_mask(int length, int visible_prefix);

VisibilityMask full_mask(int length);

VisibilityMask make_mask(const MaskSpec& spec, int length, Rng& rng);

}  // namespace ltrajdiff
