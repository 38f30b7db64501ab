#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <tuple>
#include <vector>

#include "ltrajdiff/core.hpp"
#include "ltrajdiff/rng.hpp"

namespace ltrajdiff {

struct NoiseLevels {
  double accel_std = 0.1;        // m/s^2
  double gyro_std = 0.02;        // rad/s
  double mag_std = 0.02;         // normalized field units
  double ftm_std = 0.3;          // m
  double orientation_std = 0.02; // quaternion components
  double speed_std = 0.05;       // m/s
};

// Static pinhole camera at the ground-plane origin looking down +x, world y to
// the left. Agents walk on the ground plane.
struct SceneConfig {
  int T = 50;
  double dt = 0.1;
  double camera_focal = 500.0;
  std::array<double, 2> image_size{1280.0, 720.0};
  std::array<double, 2> agent_size{0.5, 1.7};
  double camera_height = 1.5;
  std::array<double, 2> receiver_position{0.0, 0.0};
  NoiseLevels noise;
  int channel_count = 19;
  std::array<double, 2> speed_range{0.5, 1.5};
  std::array<double, 2> heading_range{-3.14159265358979323846, 3.14159265358979323846};
  double accel_std = 0.5;
  // Initial positions: forward range [x0, x1], lateral range [y0, y1] (meters).
  std::array<double, 4> start_region{8.0, 14.0, -3.0, 3.0};
  double min_depth = 0.5;
};

// Throws ConfigError on invariant violations.
void validate_scene_config(const SceneConfig& config);

struct WorldTrack {
  std::vector<std::array<double, 2>> positions;
  std::vector<double> headings;
  std::vector<double> speeds;
};

// Mobile channel layout produced by synthesize_mobile.
namespace channel {
inline constexpr int kAccel = 0;        // 3: body-frame specific force, z = gravity
inline constexpr int kGyro = 3;         // 3: yaw rate on z
inline constexpr int kMag = 6;          // 3: north unit vector in body frame
inline constexpr int kOrientation = 9;  // 4: yaw-only quaternion (w, x, y, z)
inline constexpr int kFtmDistance = 13; // 1: range to receiver
inline constexpr int kFtmStd = 14;      // 1: reported range std
inline constexpr int kSpeed = 15;       // 1: speed magnitude
inline constexpr int kMeaningful = 16;  // channels beyond this are zero padding
}  // namespace channel

inline constexpr double kGravity = 9.81;

// Random-acceleration walk. position[t+1] = position[t] + dt*speed[t]*(cos, sin)(heading[t]).
WorldTrack simulate_track(const SceneConfig& config, Rng& rng);

// Pinhole projection; throws ArgumentError when any depth is non-positive.
LayoutSequence project_to_layout(const WorldTrack& track, const SceneConfig& config);

// Inverse of project_to_layout for one frame: ground-plane (x, y).
std::array<double, 2> unproject_frame(const LayoutFrame& frame, const SceneConfig& config);

MobileSignalSequence synthesize_mobile(const WorldTrack& track, const SceneConfig& config, Rng& rng);

struct SplitFractions {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct GeneratedData {
  Dataset train;
  Dataset val;
  Dataset test;
};

// Each sample i draws from its own stream derived from (seed, i).
GeneratedData generate_dataset(const SceneConfig& config, int n_samples, const SplitFractions& fractions,
                               std::uint64_t seed);

std::string scene_config_json(const SceneConfig& config);

// Line-delimited records (one per sample) plus a sidecar "<path>.manifest.json".
void write_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

std::string format_decimal(double value);  // 9 significant digits
std::filesystem::path manifest_path(const std::filesystem::path& dataset_path);

}  // namespace ltrajdiff
