#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "ltrajdiff/core.hpp"
#include "ltrajdiff/errors.hpp"

using namespace ltrajdiff;

namespace {

LayoutSequence ramp(int n) {
  LayoutSequence s;
  for (int t = 0; t < n; ++t) s.frames.push_back({10.0 + t, 20.0 + t, 30.0, 40.0, 5.0 + t});
  return s;
}

AgentSample sample(int n, int channels = 3) {
  AgentSample s;
  s.agent_id = "a";
  s.layout = ramp(n);
  s.mobile = MobileSignalSequence(static_cast<std::size_t>(n), channels);
  return s;
}

bool has(const ValidationResult& r, const std::string& v) {
  return std::find(r.violations.begin(), r.violations.end(), v) != r.violations.end();
}

}  // namespace

TEST(ApplyMask, ZeroesHiddenFramesOnly) {
  const LayoutSequence s = ramp(4);
  const VisibilityMask m{{1, 0, 1, 0}};
  const LayoutSequence out = apply_mask(s, m);
  EXPECT_EQ(out[0], s[0]);
  EXPECT_TRUE(out[1].is_zero());
  EXPECT_EQ(out[2], s[2]);
  EXPECT_TRUE(out[3].is_zero());
}

TEST(ApplyMask, FullMaskIsIdentity) {
  const LayoutSequence s = ramp(7);
  EXPECT_EQ(apply_mask(s, VisibilityMask{std::vector<std::uint8_t>(7, 1)}), s);
}

TEST(ApplyMask, LengthMismatchThrows) {
  EXPECT_THROW(apply_mask(ramp(3), VisibilityMask{{1, 1}}), ValidationError);
}

TEST(ApplyMask, Idempotent) {
  const LayoutSequence s = ramp(6);
  const VisibilityMask m{{0, 1, 1, 0, 1, 0}};
  EXPECT_EQ(apply_mask(apply_mask(s, m), m), apply_mask(s, m));
}

TEST(VisibleTimestamps, AscendingVisibleIndices) {
  const auto v = visible_timestamps(VisibilityMask{{0, 1, 0, 1, 1}});
  EXPECT_EQ(v, (std::vector<int>{1, 3, 4}));
  EXPECT_EQ(VisibilityMask({{0, 1, 0, 1, 1}}).visible_count(), 3u);
}

TEST(CheckMask, RejectsEmptyAndNonBinary) {
  EXPECT_THROW(check_mask(VisibilityMask{{0, 0, 0}}), ValidationError);
  EXPECT_THROW(check_mask(VisibilityMask{{1, 2}}), ValidationError);
  EXPECT_NO_THROW(check_mask(VisibilityMask{{0, 1}}));
}

TEST(ValidateSample, AcceptsWellFormed) { EXPECT_TRUE(validate_sample(sample(5)).ok()); }

TEST(ValidateSample, ReportsEachViolation) {
  AgentSample s = sample(4);
  s.layout[1].w = -1.0;
  s.layout[2].h = -2.0;
  s.layout[3].d = 0.0;
  const auto r = validate_sample(s);
  EXPECT_TRUE(has(r, "negative width"));
  EXPECT_TRUE(has(r, "negative height"));
  EXPECT_TRUE(has(r, "non-positive depth"));
}

TEST(ValidateSample, LengthMismatch) {
  AgentSample s = sample(4);
  s.mobile = MobileSignalSequence(3, 3);
  EXPECT_TRUE(has(validate_sample(s), "length mismatch"));
}

TEST(ValidateSample, NonFiniteValues) {
  AgentSample s = sample(3);
  s.layout[0].x = std::numeric_limits<double>::quiet_NaN();
  s.mobile.at(1, 2) = std::numeric_limits<double>::infinity();
  const auto r = validate_sample(s);
  EXPECT_TRUE(has(r, "non-finite layout value"));
  EXPECT_TRUE(has(r, "non-finite mobile value"));
}

TEST(ValidateSample, MaskProblems) {
  AgentSample s = sample(3);
  s.mask = VisibilityMask{{0, 0, 0}};
  EXPECT_TRUE(has(validate_sample(s), "empty mask"));
  s.mask = VisibilityMask{{1, 0}};
  EXPECT_TRUE(has(validate_sample(s), "mask length mismatch"));
}

TEST(ValidateSample, HiddenZeroFramesAreNotDepthErrors) {
  AgentSample s = sample(3);
  s.mask = VisibilityMask{{1, 0, 1}};
  s.layout = apply_mask(s.layout, *s.mask);
  EXPECT_TRUE(validate_sample(s).ok());
}

TEST(ValidateDataset, MixedChannelCountsRejected) {
  Dataset ds;
  ds.samples = {sample(3, 4), sample(3, 5)};
  EXPECT_THROW(validate_dataset(ds), ValidationError);
  ds.samples = {sample(3, 4), sample(3, 4)};
  EXPECT_NO_THROW(validate_dataset(ds));
}

TEST(Split, StringRoundTrip) {
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) EXPECT_EQ(split_from_string(to_string(s)), s);
  EXPECT_THROW(split_from_string("holdout"), std::invalid_argument);
}
