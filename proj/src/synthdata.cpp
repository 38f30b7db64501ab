#include "ltrajdiff/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "ltrajdiff/errors.hpp"
#include "ltrajdiff/hashing.hpp"

namespace ltrajdiff {

using json = nlohmann::json;

void validate_scene_config(const SceneConfig& c) {
  auto require = [](bool ok, const std::string& field, const std::string& what) {
    if (!ok) throw ConfigError("scene." + field + ": " + what);
  };
  require(c.T >= 2, "T", "must be >= 2");
  require(c.dt > 0.0, "dt", "must be positive");
  require(c.camera_focal > 0.0, "camera_focal", "must be positive");
  require(c.image_size[0] > 0.0 && c.image_size[1] > 0.0, "image_size", "must be positive");
  require(c.agent_size[0] > 0.0 && c.agent_size[1] > 0.0, "agent_size", "must be positive");
  require(c.camera_height > 0.0, "camera_height", "must be positive");
  require(c.channel_count >= channel::kMeaningful, "channel_count",
          "must be >= " + std::to_string(channel::kMeaningful));
  require(c.speed_range[0] > 0.0 && c.speed_range[0] <= c.speed_range[1], "speed_range",
          "must satisfy 0 < min <= max");
  require(c.heading_range[0] <= c.heading_range[1], "heading_range", "min must not exceed max");
  require(c.accel_std >= 0.0, "accel_std", "must be >= 0");
  require(c.start_region[0] <= c.start_region[1] && c.start_region[2] <= c.start_region[3], "start_region",
          "ranges must be ordered");
  require(c.min_depth > 0.0, "min_depth", "must be positive");
  require(c.start_region[0] > c.min_depth, "start_region", "forward range must lie beyond min_depth");
  const auto& n = c.noise;
  require(n.accel_std >= 0.0 && n.gyro_std >= 0.0 && n.mag_std >= 0.0 && n.ftm_std >= 0.0 &&
              n.orientation_std >= 0.0 && n.speed_std >= 0.0,
          "noise", "all standard deviations must be >= 0");
}

namespace {

double uniform(Rng& rng, double lo, double hi) {
  if (lo == hi) return lo;
  std::uniform_real_distribution<double> u(lo, hi);
  return u(rng);
}

constexpr int kResampleAttempts = 16;

}  // namespace

WorldTrack simulate_track(const SceneConfig& config, Rng& rng) {
  validate_scene_config(config);
  const auto n = static_cast<std::size_t>(config.T);
  WorldTrack track;
  track.positions.resize(n);
  track.headings.resize(n);
  track.speeds.resize(n);

  const double smin = config.speed_range[0], smax = config.speed_range[1];
  const double speed_step = config.accel_std * config.dt;
  auto draw_heading = [&](std::size_t t) {
    if (t == 0) return uniform(rng, config.heading_range[0], config.heading_range[1]);
    const double turn = speed_step / std::max(track.speeds[t - 1], 0.5);
    return track.headings[t - 1] + turn * standard_normal(rng);
  };
  auto draw_speed = [&](std::size_t t) {
    if (t == 0) return uniform(rng, smin, smax);
    return std::clamp(track.speeds[t - 1] + speed_step * standard_normal(rng), smin, smax);
  };

  track.positions[0] = {uniform(rng, config.start_region[0], config.start_region[1]),
                        uniform(rng, config.start_region[2], config.start_region[3])};
  track.headings[0] = draw_heading(0);
  track.speeds[0] = draw_speed(0);

  for (std::size_t t = 0; t + 1 < n; ++t) {
    if (t > 0) {
      track.headings[t] = draw_heading(t);
      track.speeds[t] = draw_speed(t);
    }
    auto step = [&] {
      const double s = config.dt * track.speeds[t];
      return std::array<double, 2>{track.positions[t][0] + s * std::cos(track.headings[t]),
                                   track.positions[t][1] + s * std::sin(track.headings[t])};
    };
    auto next = step();
    for (int attempt = 0; next[0] <= config.min_depth && attempt < kResampleAttempts; ++attempt) {
      track.headings[t] = draw_heading(t);
      track.speeds[t] = draw_speed(t);
      next = step();
    }
    if (next[0] <= config.min_depth) {
      // Mirror the forward component of the heading so the agent turns away.
      track.headings[t] = std::numbers::pi - track.headings[t];
      next = step();
    }
    track.positions[t + 1] = next;
  }
  if (n > 1) {
    track.headings[n - 1] = draw_heading(n - 1);
    track.speeds[n - 1] = draw_speed(n - 1);
  }
  return track;
}

LayoutSequence project_to_layout(const WorldTrack& track, const SceneConfig& config) {
  LayoutSequence layout;
  layout.frames.reserve(track.positions.size());
  const double f = config.camera_focal;
  for (const auto& p : track.positions) {
    const double depth = p[0];
    if (!(depth > 0.0)) throw ArgumentError("project_to_layout: non-positive depth");
    LayoutFrame fr;
    fr.d = depth;
    fr.w = f * config.agent_size[0] / depth;
    fr.h = f * config.agent_size[1] / depth;
    const double u_center = config.image_size[0] / 2.0 - f * p[1] / depth;
    fr.x = u_center - fr.w / 2.0;
    fr.y = config.image_size[1] / 2.0 - f * config.camera_height / depth;
    layout.frames.push_back(fr);
  }
  return layout;
}

std::array<double, 2> unproject_frame(const LayoutFrame& frame, const SceneConfig& config) {
  const double depth = frame.d;
  const double u_center = frame.x + frame.w / 2.0;
  return {depth, (config.image_size[0] / 2.0 - u_center) * depth / config.camera_focal};
}

MobileSignalSequence synthesize_mobile(const WorldTrack& track, const SceneConfig& config, Rng& rng) {
  if (config.channel_count < 13) throw ConfigError("scene.channel_count: must be >= 13");
  validate_scene_config(config);
  const std::size_t n = track.positions.size();
  MobileSignalSequence out(n, config.channel_count);
  const double dt = config.dt;
  const auto& noise = config.noise;

  std::vector<std::array<double, 2>> accel(n, {0.0, 0.0});
  if (n >= 3) {
    for (std::size_t t = 1; t + 1 < n; ++t) {
      for (int k = 0; k < 2; ++k) {
        accel[t][k] = (track.positions[t + 1][k] - 2.0 * track.positions[t][k] + track.positions[t - 1][k]) /
                      (dt * dt);
      }
    }
    accel[0] = accel[1];
    accel[n - 1] = accel[n - 2];
  }

  auto noisy = [&](double v, double std) { return v + std * standard_normal(rng); };
  for (std::size_t t = 0; t < n; ++t) {
    const double h = track.headings[t];
    const double c = std::cos(h), s = std::sin(h);
    const auto& a = accel[t];
    out.at(t, channel::kAccel + 0) = noisy(c * a[0] + s * a[1], noise.accel_std);
    out.at(t, channel::kAccel + 1) = noisy(-s * a[0] + c * a[1], noise.accel_std);
    out.at(t, channel::kAccel + 2) = noisy(kGravity, noise.accel_std);

    double yaw_rate = 0.0;
    if (n >= 2) {
      yaw_rate = t + 1 < n ? (track.headings[t + 1] - track.headings[t]) / dt
                           : (track.headings[t] - track.headings[t - 1]) / dt;
    }
    out.at(t, channel::kGyro + 0) = noisy(0.0, noise.gyro_std);
    out.at(t, channel::kGyro + 1) = noisy(0.0, noise.gyro_std);
    out.at(t, channel::kGyro + 2) = noisy(yaw_rate, noise.gyro_std);

    out.at(t, channel::kMag + 0) = noisy(s, noise.mag_std);
    out.at(t, channel::kMag + 1) = noisy(c, noise.mag_std);
    out.at(t, channel::kMag + 2) = noisy(0.0, noise.mag_std);

    out.at(t, channel::kOrientation + 0) = noisy(std::cos(h / 2.0), noise.orientation_std);
    out.at(t, channel::kOrientation + 1) = noisy(0.0, noise.orientation_std);
    out.at(t, channel::kOrientation + 2) = noisy(0.0, noise.orientation_std);
    out.at(t, channel::kOrientation + 3) = noisy(std::sin(h / 2.0), noise.orientation_std);

    const double dx = track.positions[t][0] - config.receiver_position[0];
    const double dy = track.positions[t][1] - config.receiver_position[1];
    out.at(t, channel::kFtmDistance) = noisy(std::hypot(dx, dy), noise.ftm_std);
    out.at(t, channel::kFtmStd) = noise.ftm_std;
    out.at(t, channel::kSpeed) = noisy(track.speeds[t], noise.speed_std);
  }
  return out;
}

std::string scene_config_json(const SceneConfig& c) {
  json j = {
      {"T", c.T},
      {"dt", c.dt},
      {"camera_focal", c.camera_focal},
      {"image_size", c.image_size},
      {"agent_size", c.agent_size},
      {"camera_height", c.camera_height},
      {"receiver_position", c.receiver_position},
      {"channel_count", c.channel_count},
      {"speed_range", c.speed_range},
      {"heading_range", c.heading_range},
      {"accel_std", c.accel_std},
      {"start_region", c.start_region},
      {"min_depth", c.min_depth},
      {"noise",
       {{"accel_std", c.noise.accel_std},
        {"gyro_std", c.noise.gyro_std},
        {"mag_std", c.noise.mag_std},
        {"ftm_std", c.noise.ftm_std},
        {"orientation_std", c.noise.orientation_std},
        {"speed_std", c.noise.speed_std}}},
  };
  return j.dump();
}

GeneratedData generate_dataset(const SceneConfig& config, int n_samples, const SplitFractions& fr,
                               std::uint64_t seed) {
  validate_scene_config(config);
  if (n_samples < 3) throw ArgumentError("generate_dataset: n_samples must be >= 3");
  if (fr.train < 0.0 || fr.val < 0.0 || fr.test < 0.0 || std::abs(fr.train + fr.val + fr.test - 1.0) > 1e-9) {
    throw ArgumentError("generate_dataset: split fractions must be non-negative and sum to 1");
  }
  const int n_train = static_cast<int>(std::lround(n_samples * fr.train));
  const int n_val = static_cast<int>(std::lround(n_samples * fr.val));
  if (n_train + n_val > n_samples) throw ArgumentError("generate_dataset: split rounding overflow");

  std::vector<AgentSample> samples(static_cast<std::size_t>(n_samples));
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n_samples; ++i) {
    Rng rng = make_rng(seed, {static_cast<std::uint64_t>(i)});
    const WorldTrack track = simulate_track(config, rng);
    AgentSample s;
    char id[32];
    std::snprintf(id, sizeof(id), "agent-%06d", i);
    s.agent_id = id;
    s.layout = project_to_layout(track, config);
    s.mobile = synthesize_mobile(track, config, rng);
    samples[static_cast<std::size_t>(i)] = std::move(s);
  }

  const std::string cfg = scene_config_json(config);
  std::map<std::string, std::string> meta{
      {"schema_version", "1"},
      {"T", std::to_string(config.T)},
      {"C", std::to_string(config.channel_count)},
      {"units", "layout: x,y,w,h pixels, d meters; mobile: per-channel sensor units"},
      {"channels",
       "0-2 accel body xyz, 3-5 gyro xyz, 6-8 mag body xyz, 9-12 quaternion wxyz, 13 ftm distance, "
       "14 ftm std, 15 speed, 16+ zero padding"},
      {"generator_config", cfg},
      {"config_hash", hex64(fnv1a64(cfg))},
      {"seed", std::to_string(seed)},
  };

  GeneratedData out;
  auto fill = [&](Dataset& ds, Split split, int begin, int end) {
    ds.split = split;
    ds.metadata = meta;
    ds.metadata["split"] = to_string(split);
    for (int i = begin; i < end; ++i) ds.samples.push_back(std::move(samples[static_cast<std::size_t>(i)]));
  };
  fill(out.train, Split::kTrain, 0, n_train);
  fill(out.val, Split::kVal, n_train, n_train + n_val);
  fill(out.test, Split::kTest, n_train + n_val, n_samples);
  return out;
}

std::string format_decimal(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

std::filesystem::path manifest_path(const std::filesystem::path& dataset_path) {
  auto p = dataset_path;
  p += ".manifest.json";
  return p;
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  for (const auto& s : dataset.samples) {
    std::string line;
    line.reserve(s.layout.size() * 60 + s.mobile.samples.size() * 14);
    line += "{\"agent_id\":";
    line += json(s.agent_id).dump();
    line += ",\"layout\":[";
    for (std::size_t t = 0; t < s.layout.size(); ++t) {
      if (t) line += ',';
      line += '[';
      const auto a = s.layout[t].to_array();
      for (int c = 0; c < kLayoutDim; ++c) {
        if (c) line += ',';
        line += format_decimal(a[c]);
      }
      line += ']';
    }
    line += "],\"mobile\":[";
    for (std::size_t t = 0; t < s.mobile.size(); ++t) {
      if (t) line += ',';
      line += '[';
      for (int c = 0; c < s.mobile.channel_count; ++c) {
        if (c) line += ',';
        line += format_decimal(s.mobile.at(t, c));
      }
      line += ']';
    }
    line += ']';
    if (s.mask) {
      line += ",\"mask\":[";
      for (std::size_t t = 0; t < s.mask->size(); ++t) {
        if (t) line += ',';
        line += s.mask->flags[t] ? '1' : '0';
      }
      line += ']';
    }
    line += "}\n";
    out << line;
  }
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");

  json manifest;
  manifest["schema_version"] = "1";
  manifest["split"] = to_string(dataset.split);
  manifest["samples"] = dataset.size();
  manifest["T"] = dataset.samples.empty() ? 0 : dataset.samples.front().layout.size();
  manifest["C"] = dataset.channel_count();
  manifest["metadata"] = dataset.metadata;
  std::ofstream mout(manifest_path(path), std::ios::binary | std::ios::trunc);
  mout << manifest.dump(2) << "\n";
}

namespace {

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& what) {
  throw ParseError("line " + std::to_string(line_no) + ": " + what);
}

std::vector<std::vector<double>> number_rows(const json& rec, const char* field, std::size_t line_no) {
  if (!rec.contains(field)) parse_fail(line_no, std::string("missing field '") + field + "'");
  const auto& arr = rec.at(field);
  if (!arr.is_array()) parse_fail(line_no, std::string("field '") + field + "' must be an array");
  std::vector<std::vector<double>> rows;
  rows.reserve(arr.size());
  for (const auto& row : arr) {
    if (!row.is_array()) parse_fail(line_no, std::string("field '") + field + "' must hold arrays");
    std::vector<double> r;
    r.reserve(row.size());
    for (const auto& v : row) {
      if (!v.is_number()) parse_fail(line_no, std::string("field '") + field + "' holds a non-number");
      r.push_back(v.get<double>());
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open dataset '" + path.string() + "'");
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      parse_fail(line_no, std::string("malformed record: ") + e.what());
    }
    if (!rec.is_object()) parse_fail(line_no, "record must be an object");
    AgentSample s;
    if (!rec.contains("agent_id")) parse_fail(line_no, "missing field 'agent_id'");
    if (!rec["agent_id"].is_string()) parse_fail(line_no, "field 'agent_id' must be a string");
    s.agent_id = rec["agent_id"].get<std::string>();

    for (auto& row : number_rows(rec, "layout", line_no)) {
      if (row.size() != kLayoutDim) parse_fail(line_no, "field 'layout' rows must have 5 numbers");
      s.layout.frames.push_back(LayoutFrame::from_array(row));
    }
    const auto mobile = number_rows(rec, "mobile", line_no);
    const int channels = mobile.empty() ? 0 : static_cast<int>(mobile.front().size());
    s.mobile = MobileSignalSequence(mobile.size(), channels);
    for (std::size_t t = 0; t < mobile.size(); ++t) {
      if (static_cast<int>(mobile[t].size()) != channels) parse_fail(line_no, "field 'mobile' rows differ in length");
      for (int c = 0; c < channels; ++c) s.mobile.at(t, c) = mobile[t][static_cast<std::size_t>(c)];
    }
    if (rec.contains("mask")) {
      const auto& m = rec["mask"];
      if (!m.is_array()) parse_fail(line_no, "field 'mask' must be an array");
      VisibilityMask mask;
      for (const auto& v : m) {
        if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1)) {
          parse_fail(line_no, "field 'mask' must hold 0/1 integers");
        }
        mask.flags.push_back(static_cast<std::uint8_t>(v.get<int>()));
      }
      s.mask = std::move(mask);
    }
    for (auto it = rec.begin(); it != rec.end(); ++it) {
      const auto& k = it.key();
      if (k != "agent_id" && k != "layout" && k != "mobile" && k != "mask") {
        parse_fail(line_no, "unknown field '" + k + "'");
      }
    }
    ds.samples.push_back(std::move(s));
  }

  const auto mpath = manifest_path(path);
  if (std::filesystem::exists(mpath)) {
    std::ifstream min(mpath);
    json manifest;
    try {
      manifest = json::parse(min);
    } catch (const json::parse_error& e) {
      throw ParseError("manifest '" + mpath.string() + "': " + e.what());
    }
    if (manifest.value("schema_version", std::string()) != "1") {
      throw ParseError("manifest '" + mpath.string() + "': unsupported schema_version");
    }
    ds.split = split_from_string(manifest.value("split", std::string("train")));
    if (manifest.contains("metadata")) {
      ds.metadata = manifest["metadata"].get<std::map<std::string, std::string>>();
    }
  }
  return ds;
}

}  // namespace ltrajdiff
