#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ltrajdiff {

inline constexpr int kLayoutDim = 5;

// One timestamp of the visual layout: left-bottom corner, size (pixels) and
// depth (meters).
struct LayoutFrame {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
  double d = 0.0;

  std::array<double, kLayoutDim> to_array() const { return {x, y, w, h, d}; }
  static LayoutFrame from_array(std::span<const double> v) {
    return {v[0], v[1], v[2], v[3], v[4]};
  }
  bool is_zero() const { return x == 0.0 && y == 0.0 && w == 0.0 && h == 0.0 && d == 0.0; }
  friend bool operator==(const LayoutFrame&, const LayoutFrame&) = default;
};

struct LayoutSequence {
  std::vector<LayoutFrame> frames;

  std::size_t size() const { return frames.size(); }
  const LayoutFrame& operator[](std::size_t t) const { return frames[t]; }
  LayoutFrame& operator[](std::size_t t) { return frames[t]; }
  friend bool operator==(const LayoutSequence&, const LayoutSequence&) = default;
};

// T x C row-major matrix of sensor readings. Channel semantics are owned by
// the data source; the model treats a row as an opaque vector.
struct MobileSignalSequence {
  std::vector<double> samples;
  int channel_count = 0;

  MobileSignalSequence() = default;
  MobileSignalSequence(std::size_t length, int channels)
      : samples(length * static_cast<std::size_t>(channels), 0.0), channel_count(channels) {}

  std::size_t size() const {
    return channel_count > 0 ? samples.size() / static_cast<std::size_t>(channel_count) : 0;
  }
  double& at(std::size_t t, int c) { return samples[t * channel_count + c]; }
  double at(std::size_t t, int c) const { return samples[t * channel_count + c]; }
  std::span<const double> row(std::size_t t) const {
    return {samples.data() + t * channel_count, static_cast<std::size_t>(channel_count)};
  }
  friend bool operator==(const MobileSignalSequence&, const MobileSignalSequence&) = default;
};

// flags[t] == 1 means the frame at t is visible to the camera.
struct VisibilityMask {
  std::vector<std::uint8_t> flags;

  std::size_t size() const { return flags.size(); }
  std::size_t visible_count() const;
  friend bool operator==(const VisibilityMask&, const VisibilityMask&) = default;
};

struct AgentSample {
  std::string agent_id;
  LayoutSequence layout;
  MobileSignalSequence mobile;
  std::optional<VisibilityMask> mask;

  friend bool operator==(const AgentSample&, const AgentSample&) = default;
};

enum class Split { kTrain, kVal, kTest };

const char* to_string(Split split);
Split split_from_string(const std::string& name);

struct Dataset {
  std::vector<AgentSample> samples;
  Split split = Split::kTrain;
  std::map<std::string, std::string> metadata;

  std::size_t size() const { return samples.size(); }
  int channel_count() const { return samples.empty() ? 0 : samples.front().mobile.channel_count; }
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct ValidationResult {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Zeroes every frame whose flag is 0. Throws ValidationError on length mismatch.
LayoutSequence apply_mask(const LayoutSequence& layout, const VisibilityMask& mask);

// Ascending indices t with flags[t] == 1.
std::vector<int> visible_timestamps(const VisibilityMask& mask);

// Throws ValidationError unless every flag is 0/1 and at least one is 1.
void check_mask(const VisibilityMask& mask);

// Reports all invariant violations; never throws on bad data.
ValidationResult validate_sample(const AgentSample& sample);

// Throws ValidationError naming the first offending sample. Also enforces a
// shared channel count across the dataset.
void validate_dataset(const Dataset& dataset);

}  // namespace ltrajdiff
