#include "ltrajdiff/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "ltrajdiff/errors.hpp"

namespace ltrajdiff {

std::array<int, 3> depth_color(double depth, double lo, double hi) {
  constexpr std::array<double, 3> near{8, 48, 107};
  constexpr std::array<double, 3> far{198, 219, 239};
  double t = hi > lo ? (depth - lo) / (hi - lo) : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  std::array<int, 3> c{};
  for (int i = 0; i < 3; ++i) c[i] = static_cast<int>(std::lround(near[i] + t * (far[i] - near[i])));
  return c;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string rgb(const std::array<int, 3>& c) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "rgb(%d,%d,%d)", c[0], c[1], c[2]);
  return buf;
}

}  // namespace

std::string render_svg(const std::vector<PlotPanel>& panels, const PlotOptions& o) {
  if (panels.empty()) throw ArgumentError("render_svg: nothing to plot");
  double dmin = std::numeric_limits<double>::infinity(), dmax = -dmin;
  double xmin = 0, xmax = o.image_size[0], ymin = 0, ymax = o.image_size[1];
  for (const auto& p : panels) {
    for (const auto* seq : {&p.truth, &p.pred}) {
      for (const auto& f : seq->frames) {
        if (!std::isfinite(f.x) || !std::isfinite(f.y) || !std::isfinite(f.w) || !std::isfinite(f.h)) continue;
        dmin = std::min(dmin, f.d);
        dmax = std::max(dmax, f.d);
        xmin = std::min(xmin, f.x);
        xmax = std::max(xmax, f.x + f.w);
        ymin = std::min(ymin, f.y);
        ymax = std::max(ymax, f.y + f.h);
      }
    }
  }
  const double pad = 20.0;
  const double pw = (xmax - xmin) * o.scale + 2 * pad;
  const double ph = (ymax - ymin) * o.scale + 2 * pad + 20.0;
  // Frame coordinates -> panel SVG coordinates.
  auto sx = [&](double x) { return pad + (x - xmin) * o.scale; };
  auto sy = [&](double y) { return 20.0 + pad + (ymax - y) * o.scale; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(pw) << "\" height=\""
     << fmt(ph * static_cast<double>(panels.size())) << "\">\n";
  for (std::size_t i = 0; i < panels.size(); ++i) {
    const auto& p = panels[i];
    os << "<g class=\"panel\" transform=\"translate(0," << fmt(ph * static_cast<double>(i)) << ")\">\n";
    os << "<text x=\"" << fmt(pad) << "\" y=\"16\" font-family=\"sans-serif\" font-size=\"13\">" << p.title
       << "</text>\n";
    os << "<rect class=\"image\" x=\"" << fmt(sx(0)) << "\" y=\"" << fmt(sy(o.image_size[1])) << "\" width=\""
       << fmt(o.image_size[0] * o.scale) << "\" height=\"" << fmt(o.image_size[1] * o.scale)
       << "\" fill=\"none\" stroke=\"#999\"/>\n";
    auto boxes = [&](const LayoutSequence& seq, const char* cls, const char* dash) {
      for (std::size_t t = 0; t < seq.frames.size(); ++t) {
        const auto& f = seq.frames[t];
        const bool hidden = !p.mask.empty() && t < p.mask.size() && p.mask[t] == 0;
        os << "<rect class=\"" << cls << "\" x=\"" << fmt(sx(f.x)) << "\" y=\"" << fmt(sy(f.y + f.h))
           << "\" width=\"" << fmt(std::max(0.0, f.w) * o.scale) << "\" height=\""
           << fmt(std::max(0.0, f.h) * o.scale) << "\" fill=\"none\" stroke=\"" << rgb(depth_color(f.d, dmin, dmax))
           << "\" stroke-width=\"" << (hidden ? "0.6" : "1.4") << "\"" << dash << "/>\n";
      }
    };
    boxes(p.truth, "truth", "");
    boxes(p.pred, "pred", " stroke-dasharray=\"4,2\"");
    os << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace ltrajdiff
