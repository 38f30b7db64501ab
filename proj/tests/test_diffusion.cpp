#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ltrajdiff/diffusion.hpp"
#include "ltrajdiff/errors.hpp"

using namespace ltrajdiff;
using nn::Matrix;

namespace {

Matrix random_matrix(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

struct DecoderFixture {
  EncoderConfig config;
  nn::ParameterSet params;
  NoiseDecoder decoder;
  DecoderFixture() {
    config.embed_dim = 16;
    config.num_heads = 2;
    config.feedforward_dim = 32;
    decoder = NoiseDecoder(params, config);
    Rng rng(4);
    decoder.init(params, rng);
  }
};

}  // namespace

TEST(Schedule, FourStepExample) {
  const auto s = linear_schedule(4, 0.1, 0.4);
  const double betas[] = {0.1, 0.2, 0.3, 0.4}, bars[] = {0.9, 0.72, 0.504, 0.3024};
  for (int k = 1; k <= 4; ++k) {
    EXPECT_NEAR(s.beta(k), betas[k - 1], 1e-15);
    EXPECT_NEAR(s.alpha(k), 1.0 - betas[k - 1], 1e-15);
    EXPECT_NEAR(s.alpha_bar(k), bars[k - 1], 1e-15);
  }
}

TEST(Schedule, SingleStep) {
  const auto s = linear_schedule(1, 0.5, 0.5);
  ASSERT_EQ(s.steps(), 1);
  EXPECT_EQ(s.alpha_bar(1), 0.5);
}

TEST(Schedule, HundredStepsNarrowRange) {
  const auto s = linear_schedule(100, 1e-4, 0.05);
  double prod = 1.0;
  for (int i = 0; i < 100; ++i) prod *= 1.0 - (1e-4 + (0.05 - 1e-4) * i / 99.0);
  EXPECT_NEAR(s.alpha_bar(100), prod, 1e-14);
  EXPECT_NEAR(s.alpha_bar(100), 0.078, 5e-4);
  EXPECT_NEAR(s.alpha_bar(100), std::exp(-2.5), 0.005);
}

TEST(Schedule, MonotoneAndExactProducts) {
  const auto s = linear_schedule(100, 1e-4, 0.2);
  EXPECT_EQ(s.alpha_bar(1), s.alpha(1));
  for (int k = 2; k <= 100; ++k) {
    EXPECT_LT(s.alpha_bar(k), s.alpha_bar(k - 1));
    EXPECT_EQ(s.alpha_bar(k), s.alpha_bar(k - 1) * s.alpha(k));
  }
  EXPECT_EQ(s.beta(1), 1e-4);
  EXPECT_EQ(s.beta(100), 0.2);
}

TEST(Schedule, InvalidBounds) {
  EXPECT_THROW(linear_schedule(0, 0.1, 0.2), ArgumentError);
  EXPECT_THROW(linear_schedule(10, 0.0, 0.2), ArgumentError);
  EXPECT_THROW(linear_schedule(10, 0.3, 0.2), ArgumentError);
  EXPECT_THROW(linear_schedule(10, 0.1, 1.0), ArgumentError);
}

TEST(ForwardDiffuse, Examples) {
  const auto s = linear_schedule(4, 0.1, 0.4);
  EXPECT_NEAR(forward_diffuse(scalar(1), 2, scalar(1), s)(0, 0), 1.37768, 1e-5);
  EXPECT_NEAR(forward_diffuse(scalar(1), 2, scalar(1), s)(0, 0), std::sqrt(0.72) + std::sqrt(0.28), 1e-15);
  std::mt19937_64 r(1);
  const Matrix y0 = random_matrix(3, 5, r), eps = random_matrix(3, 5, r);
  EXPECT_EQ(forward_diffuse(y0, 3, Matrix::Zero(3, 5), s), std::sqrt(0.504) * y0);
  EXPECT_EQ(forward_diffuse(Matrix::Zero(3, 5), 3, eps, s), std::sqrt(1 - 0.504) * eps);
  EXPECT_THROW(forward_diffuse(y0, 0, eps, s), ArgumentError);
  EXPECT_THROW(forward_diffuse(y0, 5, eps, s), ArgumentError);
  EXPECT_THROW(forward_diffuse(y0, 1, Matrix::Zero(2, 5), s), ArgumentError);
}

namespace {

struct Moments {
  Matrix mean, var;
};

Moments moments(const std::vector<Matrix>& draws) {
  Moments m{Matrix::Zero(draws[0].rows(), draws[0].cols()), Matrix::Zero(draws[0].rows(), draws[0].cols())};
  for (const auto& d : draws) m.mean += d;
  m.mean /= static_cast<double>(draws.size());
  for (const auto& d : draws) m.var += (d - m.mean).cwiseAbs2();
  m.var /= static_cast<double>(draws.size() - 1);
  return m;
}

}  // namespace

// Means are checked per element; the variance is shared by every element, so
// it is estimated from all of them.
TEST(ForwardDiffuse, StatisticsAndMarginalConsistency) {
  const auto s = linear_schedule(100, 1e-4, 0.05);
  std::mt19937_64 r(99);
  const Matrix y0 = (random_matrix(10, 5, r).array().sign() * (10.0 + 10.0 * random_matrix(10, 5, r).array().abs()))
                        .matrix();
  const int n = 10000;
  for (int k : {1, 50, 100}) {
    std::vector<Matrix> direct, chained;
    for (int i = 0; i < n; ++i) {
      direct.push_back(forward_diffuse(y0, k, random_matrix(10, 5, r), s));
      Matrix c = y0;
      for (int j = 1; j <= k; ++j) c = std::sqrt(s.alpha(j)) * c + std::sqrt(s.beta(j)) * random_matrix(10, 5, r);
      chained.push_back(c);
    }
    const double var_ref = 1.0 - s.alpha_bar(k);
    for (const auto& m : {moments(direct), moments(chained)}) {
      const Matrix mean_ref = std::sqrt(s.alpha_bar(k)) * y0;
      EXPECT_LT(((m.mean - mean_ref).array() / mean_ref.array()).abs().maxCoeff(), 0.02) << "k=" << k;
      EXPECT_NEAR(m.var.mean(), var_ref, 0.02 * var_ref) << "k=" << k;
      EXPECT_LT((m.var.array() / var_ref - 1.0).abs().maxCoeff(), 0.07) << "k=" << k;
    }
  }
}

TEST(DiffusionLoss, Examples) {
  std::mt19937_64 r(2);
  const Matrix e = random_matrix(4, 5, r);
  EXPECT_EQ(diffusion_loss(e, e, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(diffusion_loss(e + Matrix::Ones(4, 5), e, 1.0), 1.0);
  const Matrix h = random_matrix(4, 5, r);
  EXPECT_EQ(diffusion_loss(h, e, 2.0), 2.0 * diffusion_loss(h, e, 1.0));
  EXPECT_DOUBLE_EQ(diffusion_loss(h.colwise().reverse(), e.colwise().reverse(), 1.0), diffusion_loss(h, e, 1.0));
  EXPECT_THROW(diffusion_loss(h, Matrix::Zero(3, 5), 1.0), ArgumentError);
}

TEST(DenoiseStep, Examples) {
  const auto s = linear_schedule(4, 0.1, 0.4);
  Rng rng(3);
  EXPECT_NEAR(denoise_step(scalar(1), scalar(0), 3, s, rng, true)(0, 0), 1.0 / std::sqrt(0.7), 1e-15);
  EXPECT_NEAR(denoise_step(scalar(1), scalar(0), 3, s, rng, true)(0, 0), 1.19523, 1e-5);
  Rng a(5), b(5);
  const double noisy = denoise_step(scalar(1), scalar(0), 3, s, a)(0, 0);
  std::normal_distribution<double> n(0.0, 1.0);
  EXPECT_NEAR(noisy, 1.0 / std::sqrt(0.7) + std::sqrt(0.3) * n(b), 1e-12);
  Rng c(7), d(8);
  EXPECT_EQ(denoise_step(scalar(1), scalar(0.3), 1, s, c), denoise_step(scalar(1), scalar(0.3), 1, s, d));
  EXPECT_THROW(denoise_step(scalar(1), scalar(0), 5, s, c), ArgumentError);
}

TEST(DenoiseStep, InversionOracle) {
  const auto s = linear_schedule(100, 1e-4, 0.05);
  std::mt19937_64 r(6);
  const Matrix y0 = random_matrix(50, 5, r), eps = random_matrix(50, 5, r);
  Matrix y = forward_diffuse(y0, 100, eps, s);
  Rng rng(0);
  for (int k = 100; k >= 1; --k) {
    // true noise relative to y0 at the current step
    const Matrix eps_k = (y - std::sqrt(s.alpha_bar(k)) * y0) / std::sqrt(1.0 - s.alpha_bar(k));
    const Matrix next = denoise_step(y, eps_k, k, s, rng, true);
    const double ab_prev = k > 1 ? s.alpha_bar(k - 1) : 1.0;
    // posterior mean of y_{k-1} given y_k, y0
    const double c0 = std::sqrt(ab_prev) * s.beta(k) / (1 - s.alpha_bar(k));
    const double ck = std::sqrt(s.alpha(k)) * (1 - ab_prev) / (1 - s.alpha_bar(k));
    ASSERT_LT((next - (c0 * y0 + ck * y)).cwiseAbs().maxCoeff(), 1e-9) << "k=" << k;
    y = next;
  }
  EXPECT_LT((y - y0).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Sample, TelescopingWithZeroPredictor) {
  const auto s = linear_schedule(100, 1e-4, 0.05);
  int calls = 0;
  const NoisePredictor zero = [&](const Matrix& y, int) {
    ++calls;
    return Matrix(Matrix::Zero(y.rows(), y.cols()));
  };
  Rng rng(11), ref_rng(11);
  const Matrix out = sample(zero, 7, 5, s, rng, true);
  EXPECT_EQ(calls, 100);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix yK(7, 5);
  for (Eigen::Index i = 0; i < yK.size(); ++i) yK.data()[i] = n(ref_rng);
  EXPECT_LT((out - yK / std::sqrt(s.alpha_bar(100))).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Sample, DecoderNfeAndDeterminism) {
  DecoderFixture f;
  const auto s = linear_schedule(20, 1e-4, 0.2);
  std::mt19937_64 r(12);
  const Matrix z = random_matrix(9, 16, r);
  Rng a(3), b(3), c(4);
  const Matrix x = sample(f.decoder, f.params, z, s, a);
  EXPECT_EQ(x.rows(), 9);
  EXPECT_EQ(x.cols(), 5);
  EXPECT_EQ(x, sample(f.decoder, f.params, z, s, b));
  EXPECT_NE(x, sample(f.decoder, f.params, z, s, c));
  int calls = 0;
  const NoisePredictor counted = [&](const Matrix& y, int k) {
    ++calls;
    return predict_noise(f.decoder, f.params, z, k, y);
  };
  Rng d(3);
  EXPECT_EQ(sample(counted, 9, 5, s, d), x);
  EXPECT_EQ(calls, 20);
}

TEST(Decoder, ShapeAndStepSensitivity) {
  DecoderFixture f;
  std::mt19937_64 r(13);
  const Matrix z = random_matrix(11, 16, r), y = random_matrix(11, 5, r);
  const Matrix a = predict_noise(f.decoder, f.params, z, 1, y);
  EXPECT_EQ(a.rows(), 11);
  EXPECT_EQ(a.cols(), 5);
  EXPECT_GT((a - predict_noise(f.decoder, f.params, z, 100, y)).norm(), 1e-8);
  EXPECT_THROW(predict_noise(f.decoder, f.params, z, 1, random_matrix(11, 4, r)), ArgumentError);
  EXPECT_THROW(predict_noise(f.decoder, f.params, random_matrix(11, 8, r), 1, y), ArgumentError);
  EXPECT_THROW(predict_noise(f.decoder, f.params, z, 0, y), ArgumentError);
}

TEST(Decoder, ZeroedConditioningPathsIgnoreZ) {
  DecoderFixture f;
  for (auto ref : f.decoder.cross_attention_params()) f.params.value(ref).setZero();
  for (const char* n : {"decoder.condition.weight", "decoder.condition.bias"}) {
    const auto ref = f.params.find(n);
    ASSERT_TRUE(ref.has_value());
    f.params.value(*ref).setZero();
  }
  std::mt19937_64 r(14);
  const Matrix y = random_matrix(6, 5, r);
  const Matrix a = predict_noise(f.decoder, f.params, random_matrix(6, 16, r), 30, y);
  const Matrix b = predict_noise(f.decoder, f.params, random_matrix(6, 16, r), 30, y);
  const Matrix c = predict_noise(f.decoder, f.params, random_matrix(3, 16, r), 30, y);
  EXPECT_EQ(a, b);
  EXPECT_TRUE(a.isApprox(c, 1e-14));
}

TEST(Decoder, CrossAttentionCarriesZ) {
  DecoderFixture f;
  std::mt19937_64 r(15);
  const Matrix y = random_matrix(6, 5, r);
  // unaligned memory length: only cross-attention sees z
  EXPECT_GT((predict_noise(f.decoder, f.params, random_matrix(4, 16, r), 10, y) -
             predict_noise(f.decoder, f.params, random_matrix(4, 16, r), 10, y))
                .norm(),
            1e-8);
}

TEST(TrainStep, FiniteLossAndStepRange) {
  DecoderFixture f;
  const auto s = linear_schedule(100, 1e-4, 0.2);
  std::mt19937_64 r(16);
  Rng rng(1);
  std::vector<int> seen(101, 0);
  for (int i = 0; i < 1000; ++i) {
    const auto res = train_diffusion_step(f.decoder, f.params, random_matrix(5, 16, r), random_matrix(5, 5, r), s, 1.0,
                                          rng);
    ASSERT_TRUE(std::isfinite(res.loss));
    ASSERT_GE(res.loss, 0.0);
    ASSERT_GE(res.k, 1);
    ASSERT_LE(res.k, 100);
    ++seen[static_cast<std::size_t>(res.k)];
  }
  EXPECT_GT(seen[1] + seen[100], 0);
}

TEST(TrainStep, GradientsMatchFiniteDifferences) {
  DecoderFixture f;
  const auto s = linear_schedule(100, 1e-4, 0.2);
  std::mt19937_64 r(17);
  const Matrix z = random_matrix(5, 16, r), y0 = random_matrix(5, 5, r);
  const Rng start(21);
  Rng rng = start;
  const auto res = train_diffusion_step(f.decoder, f.params, z, y0, s, 1.0, rng);
  std::uniform_int_distribution<std::size_t> pick_t(0, f.params.size() - 1);
  const double h = 1e-5;
  int checked = 0;
  while (checked < 10) {
    const std::size_t ti = pick_t(r);
    Matrix& w = f.params.value(ti);
    const auto ei = static_cast<Eigen::Index>(r() % static_cast<std::uint64_t>(w.size()));
    const double orig = w.data()[ei];
    w.data()[ei] = orig + h;
    Rng r1 = start;
    const double up = train_diffusion_step(f.decoder, f.params, z, y0, s, 1.0, r1).loss;
    w.data()[ei] = orig - h;
    Rng r2 = start;
    const double down = train_diffusion_step(f.decoder, f.params, z, y0, s, 1.0, r2).loss;
    w.data()[ei] = orig;
    const double fd = (up - down) / (2 * h), an = res.grads[ti].data()[ei];
    if (std::abs(fd) < 1e-7 && std::abs(an) < 1e-7) continue;
    EXPECT_LT(std::abs(fd - an) / std::max(std::abs(fd), std::abs(an)), 1e-4) << f.params.name(ti);
    ++checked;
  }
  for (int i = 0; i < 5; ++i) {
    Matrix zp = z;
    const Eigen::Index e = static_cast<Eigen::Index>(r() % 80);
    zp.data()[e] += h;
    Rng r1 = start;
    const double up = train_diffusion_step(f.decoder, f.params, zp, y0, s, 1.0, r1).loss;
    zp.data()[e] -= 2 * h;
    Rng r2 = start;
    const double down = train_diffusion_step(f.decoder, f.params, zp, y0, s, 1.0, r2).loss;
    EXPECT_NEAR(res.z_grad.data()[e], (up - down) / (2 * h), 1e-4 * std::max(1.0, std::abs(res.z_grad.data()[e])));
  }
}

TEST(DiffusionConfigTest, Validation) {
  DiffusionConfig c;
  EXPECT_NO_THROW(c.validate());
  c.K = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = DiffusionConfig{};
  c.lambda = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Decoder, PreconditionedZeroNetworkIsPriorDenoiser) {
  DecoderFixture f;
  const auto s = linear_schedule(20, 1e-4, 0.2);
  f.decoder.attach_schedule(s);
  ASSERT_TRUE(f.decoder.preconditioned());
  f.params.value(*f.params.find("decoder.output.weight")).setZero();
  f.params.value(*f.params.find("decoder.output.bias")).setZero();
  std::mt19937_64 r(18);
  const Matrix y = random_matrix(7, 5, r);
  for (int k : {1, 10, 20}) {
    EXPECT_TRUE(predict_noise(f.decoder, f.params, random_matrix(7, 16, r), k, y)
                    .isApprox(std::sqrt(1.0 - s.alpha_bar(k)) * y, 1e-14));
  }
  EXPECT_THROW(predict_noise(f.decoder, f.params, random_matrix(7, 16, r), 21, y), ArgumentError);
}

TEST(Decoder, PreconditionedOutputMapsToCleanEstimate) {
  DecoderFixture f;
  const auto s = linear_schedule(20, 1e-4, 0.2);
  std::mt19937_64 r(19);
  const Matrix z = random_matrix(7, 16, r), y = random_matrix(7, 5, r);
  const Matrix raw = predict_noise(f.decoder, f.params, z, 12, y);
  f.decoder.attach_schedule(s);
  const Matrix eps = predict_noise(f.decoder, f.params, z, 12, y);
  const double ab = s.alpha_bar(12);
  const Matrix x0 = (y - std::sqrt(1 - ab) * eps) / std::sqrt(ab);
  EXPECT_TRUE(x0.isApprox(std::sqrt(ab) * y - std::sqrt(1 - ab) * raw, 1e-12));
}
