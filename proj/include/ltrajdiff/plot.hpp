#pragma once

#include <array>
#include <string>
#include <vector>

#include "ltrajdiff/core.hpp"

namespace ltrajdiff {

struct PlotPanel {
  std::string title;
  LayoutSequence truth;
  LayoutSequence pred;  // may be empty
  std::vector<std::uint8_t> mask;  // may be empty
};

struct PlotOptions {
  std::array<double, 2> image_size{1280.0, 720.0};
  double scale = 0.5;  // pixels per layout pixel
};

// Dark (near) to light (far) blue.
std::array<int, 3> depth_color(double depth, double min_depth, double max_depth);

// One SVG with a panel per sample: truth boxes solid, predictions dashed,
// hidden timestamps drawn thinner. Layout y is measured upward from the
// image bottom.
std::string render_svg(const std::vector<PlotPanel>& panels, const PlotOptions& options = {});

}  // namespace ltrajdiff
