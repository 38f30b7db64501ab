#include "ltrajdiff/masking.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "ltrajdiff/errors.hpp"

namespace ltrajdiff {
namespace {

VisibilityMask shuffled_mask(int length, int hidden, Rng& rng) {
  hidden = std::min(hidden, length - 1);
  VisibilityMask mask;
  mask.flags.assign(static_cast<std::size_t>(length), 1);
  std::fill_n(mask.flags.begin(), hidden, std::uint8_t{0});
  std::shuffle(mask.flags.begin(), mask.flags.end(), rng);
  return mask;
}

int hidden_count(int length, double ratio) {
  return static_cast<int>(std::floor(static_cast<double>(length) * ratio));
}

}  // namespace

std::pair<VisibilityMask, double> random_mask(int length, Rng& rng) {
  if (length < 1) throw ArgumentError("random_mask: T must be >= 1");
  const double r = uniform01(rng);
  return {shuffled_mask(length, hidden_count(length, r), rng), r};
}

VisibilityMask fixed_ratio_mask(int length, double ratio, Rng& rng) {
  if (length < 1) throw ArgumentError("fixed_ratio_mask: T must be >= 1");
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw ArgumentError("fixed_ratio_mask: ratio must be in [0,1]");
  return shuffled_mask(length, hidden_count(length, ratio), rng);
}

VisibilityMask prefix_mask(int length, int visible_prefix) {
  if (visible_prefix < 1 || visible_prefix > length) {
    throw ArgumentError("prefix_mask: k=" + std::to_string(visible_prefix) + " outside [1, " +
                        std::to_string(length) + "]");
  }
  VisibilityMask mask;
  mask.flags.assign(static_cast<std::size_t>(length), 0);
  std::fill_n(mask.flags.begin(), visible_prefix, std::uint8_t{1});
  return mask;
}

VisibilityMask full_mask(int length) {
  if (length < 1) throw ArgumentError("full_mask: T must be >= 1");
  VisibilityMask mask;
  mask.flags.assign(static_cast<std::size_t>(length), 1);
  return mask;
}

VisibilityMask make_mask(const MaskSpec& spec, int length, Rng& rng) {
  switch (spec.kind) {
    case MaskKind::kRandomRatio: return random_mask(length, rng).first;
    case MaskKind::kFixedRatio: return fixed_ratio_mask(length, spec.ratio, rng);
    case MaskKind::kPrefix: return prefix_mask(length, spec.prefix_len);
    case MaskKind::kFull: return full_mask(length);
  }
  throw ArgumentError("unknown mask kind");
}

MaskSpec MaskSpec::parse(const std::string& text) {
  MaskSpec spec;
  if (text == "random") return spec;
  if (text == "full") {
    spec.kind = MaskKind::kFull;
    return spec;
  }
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    const std::string head = text.substr(0, colon);
    const std::string tail = text.substr(colon + 1);
    try {
      std::size_t used = 0;
      if (head == "fixed") {
        spec.kind = MaskKind::kFixedRatio;
        spec.ratio = std::stod(tail, &used);
        if (used == tail.size() && spec.ratio >= 0.0 && spec.ratio <= 1.0) return spec;
      } else if (head == "prefix") {
        spec.kind = MaskKind::kPrefix;
        spec.prefix_len = std::stoi(tail, &used);
        if (used == tail.size() && spec.prefix_len >= 1) return spec;
      }
    } catch (const std::exception&) {
    }
  }
  throw ArgumentError("invalid mask spec '" + text + "' (expected random | full | fixed:<r> | prefix:<k>)");
}

std::string MaskSpec::to_string() const {
  switch (kind) {
    case MaskKind::kRandomRatio: return "random";
    case MaskKind::kFull: return "full";
    case MaskKind::kFixedRatio: {
      std::ostringstream os;
      os << "fixed:" << ratio;
      return os.str();
    }
    case MaskKind::kPrefix: return "prefix:" + std::to_string(prefix_len);
  }
  return "random";
}

}  // namespace ltrajdiff
