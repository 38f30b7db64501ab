#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ltrajdiff/errors.hpp"
#include "ltrajdiff/metrics.hpp"
#include "ltrajdiff/synthdata.hpp"

using namespace ltrajdiff;

namespace {

LayoutFrame random_box(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(-50, 50), size(0.5, 40), depth(0.5, 20);
  return {pos(rng), pos(rng), size(rng), size(rng), depth(rng)};
}

LayoutSequence seq(std::initializer_list<LayoutFrame> frames) { return LayoutSequence{frames}; }

}  // namespace

TEST(MseT, PerfectIsZero) {
  const auto s = seq({{1, 2, 3, 4, 5}, {6, 7, 8, 9, 10}});
  EXPECT_EQ(mse_t(s, s), 0.0);
}

TEST(MseT, UnitOffsetEverywhere) {
  const auto a = seq({{1, 2, 3, 4, 5}, {0, 0, 1, 1, 1}});
  const auto b = seq({{2, 3, 4, 5, 6}, {1, 1, 2, 2, 2}});
  EXPECT_DOUBLE_EQ(mse_t(a, b), 5.0);
}

TEST(MseT, HandExample) {
  const auto a = seq({{0, 0, 0, 0, 1}, {0, 0, 0, 0, 1}});
  const auto b = seq({{1, 0, 0, 0, 1}, {0, 2, 0, 0, 1}});
  EXPECT_DOUBLE_EQ(mse_t(a, b), 2.5);
}

TEST(MseT, LengthMismatchThrows) {
  EXPECT_THROW(mse_t(seq({{0, 0, 1, 1, 1}}), seq({})), ArgumentError);
}

TEST(MseT, ScaleLaw) {
  std::mt19937_64 rng(3);
  LayoutSequence a, b, ca, cb;
  const double c = 3.5;
  for (int t = 0; t < 20; ++t) {
    a.frames.push_back(random_box(rng));
    b.frames.push_back(random_box(rng));
    auto sa = a.frames.back().to_array(), sb = b.frames.back().to_array();
    for (auto& v : sa) v *= c;
    for (auto& v : sb) v *= c;
    ca.frames.push_back(LayoutFrame::from_array(sa));
    cb.frames.push_back(LayoutFrame::from_array(sb));
  }
  EXPECT_NEAR(mse_t(ca, cb), c * c * mse_t(a, b), 1e-9 * mse_t(ca, cb));
}

TEST(IouDFrame, IdenticalBoxesBothModes) {
  const LayoutFrame f{0, 0, 10, 10, 7};
  EXPECT_EQ(iou_d_frame(f, f, IouDepthMode::kAgreement), 1.0);
  EXPECT_EQ(iou_d_frame(f, f, IouDepthMode::kPaperLiteral), 0.0);
}

TEST(IouDFrame, DisjointIsZero) {
  const LayoutFrame a{0, 0, 10, 10, 5}, b{20, 20, 10, 10, 4};
  EXPECT_EQ(iou_d_frame(a, b, IouDepthMode::kAgreement), 0.0);
  EXPECT_EQ(iou_d_frame(a, b, IouDepthMode::kPaperLiteral), 0.0);
}

TEST(IouDFrame, HandExample) {
  const LayoutFrame truth{0, 0, 10, 10, 10}, pred{5, 5, 10, 10, 5};
  EXPECT_NEAR(box_iou(truth, pred), 1.0 / 7.0, 1e-12);
  EXPECT_NEAR(iou_d_frame(truth, pred, IouDepthMode::kAgreement), 0.5 / 7.0, 1e-12);
  EXPECT_NEAR(iou_d_frame(truth, pred, IouDepthMode::kPaperLiteral), 0.5 / 7.0, 1e-12);
}

TEST(IouDFrame, NonPositiveDepthThrows) {
  EXPECT_THROW(iou_d_frame({0, 0, 1, 1, 0}, {0, 0, 1, 1, 0}), ArgumentError);
}

TEST(IouDFrame, NegativePredictedDepthStaysInRange) {
  const LayoutFrame truth{0, 0, 10, 10, 5}, pred{0, 0, 10, 10, -3};
  EXPECT_EQ(iou_d_frame(truth, pred, IouDepthMode::kAgreement), 0.0);
  EXPECT_EQ(iou_d_frame(truth, pred, IouDepthMode::kPaperLiteral), 1.0);
}

TEST(IouDFrame, DegenerateBoxesScoreZero) {
  EXPECT_EQ(iou_d_frame({0, 0, 0, 0, 1}, {0, 0, 0, 0, 1}), 0.0);
  EXPECT_EQ(iou_d_frame(LayoutFrame{}, {0, 0, 10, 10, 5}), 0.0);
}

TEST(IouDFrame, SymmetricTranslationInvariantBounded) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> off(-1000, 1000);
  for (int i = 0; i < 1000; ++i) {
    const LayoutFrame a = random_box(rng), b = random_box(rng);
    for (auto mode : {IouDepthMode::kAgreement, IouDepthMode::kPaperLiteral}) {
      const double ab = iou_d_frame(a, b, mode);
      EXPECT_NEAR(ab, iou_d_frame(b, a, mode), 1e-15);
      ASSERT_GE(ab, 0.0);
      ASSERT_LE(ab, 1.0);
      const double dx = off(rng), dy = off(rng);
      LayoutFrame ta = a, tb = b;
      ta.x += dx;
      tb.x += dx;
      ta.y += dy;
      tb.y += dy;
      EXPECT_NEAR(iou_d_frame(ta, tb, mode), ab, 1e-12);
    }
  }
}

TEST(IouDFrame, AgreementEqualsOneOnlyWhenIdentical) {
  const LayoutFrame a{1, 2, 3, 4, 5};
  LayoutFrame b = a;
  b.d = 5.0001;
  EXPECT_LT(iou_d_frame(a, b), 1.0);
  b = a;
  b.x += 1e-6;
  EXPECT_LT(iou_d_frame(a, b), 1.0);
}

TEST(IouD, AllPerfectAndHalfDisjoint) {
  const auto t = seq({{0, 0, 10, 10, 5}, {0, 0, 10, 10, 5}});
  EXPECT_EQ(iou_d(t, t), 1.0);
  const auto p = seq({{0, 0, 10, 10, 5}, {100, 100, 10, 10, 5}});
  EXPECT_DOUBLE_EQ(iou_d(t, p), 0.5);
}

TEST(IouD, MatchesFrameLoop) {
  std::mt19937_64 rng(21);
  LayoutSequence a, b;
  for (int t = 0; t < 100; ++t) {
    a.frames.push_back(random_box(rng));
    b.frames.push_back(random_box(rng));
  }
  for (auto mode : {IouDepthMode::kAgreement, IouDepthMode::kPaperLiteral}) {
    double sum = 0.0;
    for (int t = 0; t < 100; ++t) sum += iou_d_frame(a[t], b[t], mode);
    EXPECT_EQ(iou_d(a, b, mode), sum / 100.0);
  }
}

TEST(RasterOracle, IdenticalDisjointAndHandCase) {
  const LayoutFrame u{0, 0, 1, 1, 1};
  EXPECT_NEAR(rasterize_iou_oracle(u, u, 200), 1.0, 1.0 / 200);
  EXPECT_EQ(rasterize_iou_oracle({0, 0, 1, 1, 1}, {5, 5, 1, 1, 1}, 200), 0.0);
  EXPECT_NEAR(rasterize_iou_oracle({0, 0, 10, 10, 1}, {5, 5, 10, 10, 1}, 1000), 1.0 / 7.0, 0.005);
}

TEST(RasterOracle, AgreesWithAnalyticIou) {
  std::mt19937_64 rng(5);
  const int res = 200;
  for (int i = 0; i < 300; ++i) {
    const LayoutFrame a = random_box(rng), b = random_box(rng);
    EXPECT_LT(std::abs(box_iou(a, b) - rasterize_iou_oracle(a, b, res)), 5.0 / res);
  }
}

TEST(IouDepthMode, StringRoundTrip) {
  for (auto m : {IouDepthMode::kAgreement, IouDepthMode::kPaperLiteral}) {
    EXPECT_EQ(iou_depth_mode_from_string(to_string(m)), m);
  }
  EXPECT_THROW(iou_depth_mode_from_string("inverse"), std::invalid_argument);
}

class EvaluateTest : public ::testing::Test {
 protected:
  void SetUp() override {
    SceneConfig sc;
    sc.T = 20;
    data_ = generate_dataset(sc, 40, SplitFractions{0.5, 0.25, 0.25}, 3).train;
  }
  Dataset data_;
};

TEST_F(EvaluateTest, OraclePredictorIsPerfect) {
  const OraclePredictor oracle(data_);
  const auto r = evaluate(oracle, data_, EvalOptions{});
  EXPECT_EQ(r.mse_t, 0.0);
  EXPECT_EQ(r.iou_d, 1.0);
  EXPECT_EQ(r.iou_d_paper_literal, 0.0);
  EXPECT_EQ(r.failures, 0u);
}

TEST_F(EvaluateTest, ZeroPredictorHasNoOverlap) {
  const auto r = evaluate(ZeroPredictor{}, data_, EvalOptions{});
  EXPECT_EQ(r.iou_d, 0.0);
  EXPECT_GT(r.mse_t, 0.0);
}

TEST_F(EvaluateTest, AggregateIsMeanOfPerSample) {
  const auto r = evaluate(CopyFirstVisiblePredictor{}, data_, EvalOptions{});
  ASSERT_EQ(r.per_sample.size(), data_.samples.size());
  double m = 0.0, i = 0.0;
  for (const auto& s : r.per_sample) {
    m += s.mse_t;
    i += s.iou_d;
  }
  EXPECT_EQ(r.mse_t, m / static_cast<double>(r.per_sample.size()));
  EXPECT_EQ(r.iou_d, i / static_cast<double>(r.per_sample.size()));
}

TEST_F(EvaluateTest, ParallelMatchesSerialBitwise) {
  EvalOptions o;
  o.seed = 77;
  const auto a = evaluate(CopyFirstVisiblePredictor{}, data_, o);
  const auto b = evaluate_serial(CopyFirstVisiblePredictor{}, data_, o);
  EXPECT_EQ(a.mse_t, b.mse_t);
  EXPECT_EQ(a.iou_d, b.iou_d);
  for (std::size_t k = 0; k < a.per_sample.size(); ++k) EXPECT_EQ(a.per_sample[k].pred, b.per_sample[k].pred);
}

TEST_F(EvaluateTest, MaxSamplesLimits) {
  EvalOptions o;
  o.max_samples = 5;
  EXPECT_EQ(evaluate(ZeroPredictor{}, data_, o).per_sample.size(), 5u);
}

namespace {

class Failing : public LayoutPredictor {
 public:
  LayoutSequence predict(const PredictorInput& in, Rng&) const override {
    if (in.agent_id.back() % 2 == 0) throw NumericError("boom");
    return in.masked_layout;
  }
};

}  // namespace

TEST_F(EvaluateTest, FailuresRecordedNotFatal) {
  const auto r = evaluate(Failing{}, data_, EvalOptions{});
  EXPECT_GT(r.failures, 0u);
  EXPECT_LT(r.failures, data_.samples.size());
  double m = 0.0;
  std::size_t ok = 0;
  for (const auto& s : r.per_sample) {
    if (s.error.empty()) {
      m += s.mse_t;
      ++ok;
    }
  }
  EXPECT_EQ(r.mse_t, m / static_cast<double>(ok));
}
