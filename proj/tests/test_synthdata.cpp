#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ltrajdiff/errors.hpp"
#include "ltrajdiff/synthdata.hpp"

using namespace ltrajdiff;
namespace fs = std::filesystem;

namespace {

SceneConfig noiseless() {
  SceneConfig c;
  c.noise = NoiseLevels{0, 0, 0, 0, 0, 0};
  return c;
}

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("ltrajdiff_synth_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

WorldTrack single_point(double x, double y) {
  WorldTrack t;
  t.positions = {{x, y}};
  t.headings = {0.0};
  t.speeds = {1.0};
  return t;
}

}  // namespace

TEST(Projection, SizeAtFiveMeters) {
  SceneConfig c;
  const auto l = project_to_layout(single_point(5.0, 0.0), c);
  EXPECT_NEAR(l[0].w, 50.0, 1e-12);
  EXPECT_NEAR(l[0].h, 170.0, 1e-12);
  EXPECT_EQ(l[0].d, 5.0);
}

TEST(Projection, DoublingDepthHalvesSize) {
  SceneConfig c;
  const auto a = project_to_layout(single_point(4.0, 1.0), c)[0];
  const auto b = project_to_layout(single_point(8.0, 1.0), c)[0];
  EXPECT_NEAR(b.w, a.w / 2.0, 1e-12);
  EXPECT_NEAR(b.h, a.h / 2.0, 1e-12);
}

TEST(Projection, OnAxisIsCentered) {
  SceneConfig c;
  const auto f = project_to_layout(single_point(7.0, 0.0), c)[0];
  EXPECT_NEAR(f.x, c.image_size[0] / 2.0 - f.w / 2.0, 1e-12);
}

TEST(Projection, NonPositiveDepthThrows) {
  SceneConfig c;
  EXPECT_THROW(project_to_layout(single_point(0.0, 1.0), c), ArgumentError);
  EXPECT_THROW(project_to_layout(single_point(-1.0, 1.0), c), ArgumentError);
}

TEST(Projection, UnprojectInverts) {
  SceneConfig c;
  const auto f = project_to_layout(single_point(6.5, -1.25), c)[0];
  const auto p = unproject_frame(f, c);
  EXPECT_NEAR(p[0], 6.5, 1e-12);
  EXPECT_NEAR(p[1], -1.25, 1e-12);
}

TEST(Track, StaysInFrontAndIsConsistent) {
  SceneConfig c;
  c.start_region = {1.0, 2.0, -1.0, 1.0};
  for (std::uint64_t s = 0; s < 200; ++s) {
    Rng rng = make_rng(11, {s});
    const auto t = simulate_track(c, rng);
    ASSERT_EQ(t.positions.size(), 50u);
    for (std::size_t i = 0; i < t.positions.size(); ++i) {
      ASSERT_GT(t.positions[i][0], c.min_depth);
      ASSERT_GE(t.speeds[i], c.speed_range[0]);
      ASSERT_LE(t.speeds[i], c.speed_range[1]);
      if (i + 1 < t.positions.size()) {
        const double dx = t.positions[i + 1][0] - t.positions[i][0];
        const double dy = t.positions[i + 1][1] - t.positions[i][1];
        ASSERT_NEAR(std::hypot(dx, dy), c.dt * t.speeds[i], 1e-9);
      }
    }
  }
}

TEST(Mobile, NoiselessStraightTrack) {
  SceneConfig c = noiseless();
  c.T = 20;
  WorldTrack t;
  const double h = 0.3, v = 1.2;
  for (int i = 0; i < c.T; ++i) {
    t.positions.push_back({10.0 + i * c.dt * v * std::cos(h), 0.5 + i * c.dt * v * std::sin(h)});
    t.headings.push_back(h);
    t.speeds.push_back(v);
  }
  Rng rng(1);
  const auto m = synthesize_mobile(t, c, rng);
  ASSERT_EQ(m.size(), 20u);
  ASSERT_EQ(m.channel_count, 19);
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_NEAR(m.at(i, channel::kAccel + 0), 0.0, 1e-9);
    EXPECT_NEAR(m.at(i, channel::kAccel + 1), 0.0, 1e-9);
    EXPECT_EQ(m.at(i, channel::kAccel + 2), kGravity);
    for (int k = 0; k < 3; ++k) EXPECT_EQ(m.at(i, channel::kGyro + k), 0.0);
    EXPECT_NEAR(m.at(i, channel::kFtmDistance), std::hypot(t.positions[i][0], t.positions[i][1]), 1e-12);
    EXPECT_EQ(m.at(i, channel::kSpeed), v);
    const double norm = std::hypot(m.at(i, channel::kMag), m.at(i, channel::kMag + 1));
    EXPECT_NEAR(norm, 1.0, 1e-12);
    for (int k = channel::kMeaningful; k < 19; ++k) EXPECT_EQ(m.at(i, k), 0.0);
  }
}

TEST(Mobile, FtmNoiseStd) {
  SceneConfig c;
  c.noise.ftm_std = 0.5;
  c.T = 10000;
  Rng rng(42);
  const auto t = simulate_track(c, rng);
  const auto m = synthesize_mobile(t, c, rng);
  double sum = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double e = m.at(i, channel::kFtmDistance) - std::hypot(t.positions[i][0], t.positions[i][1]);
    sum += e;
    sq += e * e;
  }
  const double n = static_cast<double>(m.size());
  const double sd = std::sqrt((sq - sum * sum / n) / (n - 1));
  EXPECT_GE(sd, 0.48);
  EXPECT_LE(sd, 0.52);
}

TEST(Mobile, ChannelCountBelowMinimumThrows) {
  SceneConfig c;
  c.channel_count = 12;
  Rng rng(0);
  WorldTrack t = single_point(5, 0);
  EXPECT_THROW(synthesize_mobile(t, c, rng), ConfigError);
}

TEST(Generate, SplitSizesAndValidity) {
  SceneConfig c;
  c.T = 10;
  const auto g = generate_dataset(c, 2000, SplitFractions{0.8, 0.1, 0.1}, 5);
  EXPECT_EQ(g.train.size(), 1600u);
  EXPECT_EQ(g.val.size(), 200u);
  EXPECT_EQ(g.test.size(), 200u);
  EXPECT_EQ(g.train.split, Split::kTrain);
  EXPECT_EQ(g.test.metadata.at("seed"), "5");
  std::set<std::string> ids;
  for (const auto* ds : {&g.train, &g.val, &g.test}) {
    for (const auto& s : ds->samples) {
      ASSERT_TRUE(validate_sample(s).ok()) << s.agent_id;
      ASSERT_EQ(s.mobile.channel_count, 19);
      ASSERT_EQ(s.layout.size(), 10u);
      ids.insert(s.agent_id);
    }
  }
  EXPECT_EQ(ids.size(), 2000u);
}

TEST(Generate, ProjectionConsistency) {
  SceneConfig c;
  const auto g = generate_dataset(c, 100, SplitFractions{1.0, 0.0, 0.0}, 8);
  for (const auto& s : g.train.samples) {
    const double wd = s.layout[0].w * s.layout[0].d, hd = s.layout[0].h * s.layout[0].d;
    EXPECT_NEAR(wd, c.camera_focal * c.agent_size[0], 1e-9 * wd);
    for (const auto& f : s.layout.frames) {
      ASSERT_NEAR(f.w * f.d, wd, 1e-9 * wd);
      ASSERT_NEAR(f.h * f.d, hd, 1e-9 * hd);
    }
  }
}

TEST(Generate, DeadReckoningReproducesLayout) {
  const SceneConfig c = noiseless();
  const auto g = generate_dataset(c, 50, SplitFractions{1.0, 0.0, 0.0}, 13);
  for (const auto& s : g.train.samples) {
    WorldTrack rec;
    rec.positions.push_back(unproject_frame(s.layout[0], c));
    for (std::size_t t = 0; t + 1 < s.layout.size(); ++t) {
      const double heading = std::atan2(s.mobile.at(t, channel::kMag), s.mobile.at(t, channel::kMag + 1));
      const double v = s.mobile.at(t, channel::kSpeed);
      const auto& p = rec.positions.back();
      rec.positions.push_back({p[0] + c.dt * v * std::cos(heading), p[1] + c.dt * v * std::sin(heading)});
    }
    const auto layout = project_to_layout(rec, c);
    for (std::size_t t = 0; t < layout.size(); ++t) {
      const auto a = layout[t].to_array(), b = s.layout[t].to_array();
      for (int k = 0; k < kLayoutDim; ++k) ASSERT_NEAR(a[k], b[k], 1e-6) << s.agent_id << " t=" << t;
    }
  }
}

TEST(Generate, InvalidArguments) {
  SceneConfig c;
  EXPECT_THROW(generate_dataset(c, 2, SplitFractions{}, 0), ArgumentError);
  EXPECT_THROW(generate_dataset(c, 10, SplitFractions{0.5, 0.5, 0.5}, 0), ArgumentError);
  EXPECT_THROW(generate_dataset(c, 10, SplitFractions{1.2, -0.1, -0.1}, 0), ArgumentError);
  c.T = 1;
  EXPECT_THROW(generate_dataset(c, 10, SplitFractions{}, 0), ConfigError);
}

TEST(Generate, DeterministicAndSeedSensitive) {
  SceneConfig c;
  c.T = 12;
  const auto a = generate_dataset(c, 30, SplitFractions{}, 99);
  const auto b = generate_dataset(c, 30, SplitFractions{}, 99);
  const auto d = generate_dataset(c, 30, SplitFractions{}, 100);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  EXPECT_NE(a.train.samples.front().layout, d.train.samples.front().layout);
  const auto dir = temp_dir("det");
  write_dataset(a.train, dir / "a.jsonl");
  write_dataset(b.train, dir / "b.jsonl");
  EXPECT_EQ(slurp(dir / "a.jsonl"), slurp(dir / "b.jsonl"));
}

TEST(DatasetIo, RoundTripWithinNineDigits) {
  SceneConfig c;
  c.T = 15;
  auto g = generate_dataset(c, 20, SplitFractions{0.5, 0.25, 0.25}, 4);
  g.val.samples[0].mask = VisibilityMask{std::vector<std::uint8_t>(15, 1)};
  g.val.samples[0].mask->flags[3] = 0;
  const auto dir = temp_dir("rt");
  write_dataset(g.val, dir / "val.jsonl");
  EXPECT_TRUE(fs::exists(manifest_path(dir / "val.jsonl")));
  const auto back = read_dataset(dir / "val.jsonl");
  ASSERT_EQ(back.size(), g.val.size());
  EXPECT_EQ(back.split, Split::kVal);
  EXPECT_EQ(back.metadata, g.val.metadata);
  EXPECT_EQ(back.samples[0].mask, g.val.samples[0].mask);
  EXPECT_FALSE(back.samples[1].mask.has_value());
  for (std::size_t i = 0; i < back.size(); ++i) {
    const auto& a = g.val.samples[i];
    const auto& b = back.samples[i];
    EXPECT_EQ(a.agent_id, b.agent_id);
    for (std::size_t t = 0; t < a.layout.size(); ++t) {
      const auto x = a.layout[t].to_array(), y = b.layout[t].to_array();
      for (int k = 0; k < kLayoutDim; ++k) ASSERT_NEAR(x[k], y[k], 1e-8 * std::max(1.0, std::abs(x[k])));
    }
    ASSERT_EQ(a.mobile.samples.size(), b.mobile.samples.size());
    for (std::size_t k = 0; k < a.mobile.samples.size(); ++k) {
      ASSERT_NEAR(a.mobile.samples[k], b.mobile.samples[k], 1e-8 * std::max(1.0, std::abs(a.mobile.samples[k])));
    }
  }
  write_dataset(back, dir / "again.jsonl");
  EXPECT_EQ(slurp(dir / "val.jsonl"), slurp(dir / "again.jsonl"));
}

TEST(DatasetIo, FormatDecimalNineDigits) {
  EXPECT_EQ(format_decimal(1.0 / 3.0), "0.333333333");
  EXPECT_EQ(format_decimal(0.0), "0");
  EXPECT_EQ(std::stod(format_decimal(123456.789012)), 123456.789);
}

namespace {

std::string parse_error_of(const std::string& content) {
  const auto dir = temp_dir("bad");
  {
    std::ofstream out(dir / "bad.jsonl");
    out << content;
  }
  try {
    read_dataset(dir / "bad.jsonl");
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

const char* kGood = R"({"agent_id":"a","layout":[[1,2,3,4,5]],"mobile":[[0,0]]})";

}  // namespace

TEST(DatasetIo, ParseErrorsCiteLine) {
  const std::string good = std::string(kGood) + "\n";
  EXPECT_EQ(parse_error_of(good + good), "");
  EXPECT_NE(parse_error_of(good + "{not json\n").find("line 2"), std::string::npos);
  EXPECT_NE(parse_error_of(good + good + R"({"agent_id":"b","layout":[[1,2,3]],"mobile":[[0,0]]})").find("line 3"),
            std::string::npos);
  EXPECT_NE(parse_error_of(R"({"layout":[[1,2,3,4,5]],"mobile":[[0,0]]})").find("line 1: missing field 'agent_id'"),
            std::string::npos);
  EXPECT_NE(parse_error_of(R"({"agent_id":"a","layout":[[1,2,3,4,5]],"mobile":[[0,0]],"mask":[2]})").find("line 1"),
            std::string::npos);
  EXPECT_NE(parse_error_of(R"({"agent_id":"a","layout":[[1,2,3,4,"x"]],"mobile":[[0,0]]})").find("non-number"),
            std::string::npos);
  EXPECT_THROW(read_dataset("/nonexistent/dir/x.jsonl"), ParseError);
}

TEST(SceneConfigValidation, RejectsBadFields) {
  SceneConfig c;
  c.camera_focal = 0;
  EXPECT_THROW(validate_scene_config(c), ConfigError);
  c = SceneConfig{};
  c.noise.gyro_std = -1;
  EXPECT_THROW(validate_scene_config(c), ConfigError);
  c = SceneConfig{};
  c.channel_count = 15;
  EXPECT_THROW(validate_scene_config(c), ConfigError);
  EXPECT_NO_THROW(validate_scene_config(SceneConfig{}));
}
