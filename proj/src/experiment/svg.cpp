#include "pfscale/experiment/svg.hpp"

#include "pfscale/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace pfscale::experiment {

namespace {

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                                 "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f"};
constexpr double kLeft = 72.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 56.0;

std::string fixed(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.2f", v);
  return buffer;
}

std::string label_number(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%g", v);
  return buffer;
}

std::string escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Maps data values to pixel offsets along one axis; works in log10 space
// for log axes.
struct Scale {
  bool log = false;
  double lo = 0.0;
  double hi = 1.0;
  double pixelLo = 0.0;
  double pixelHi = 1.0;

  double transform(double v) const { return log ? std::log10(v) : v; }
  double operator()(double v) const {
    return pixelLo + (transform(v) - lo) / (hi - lo) * (pixelHi - pixelLo);
  }
};

void fit_range(Scale& s, double minV, double maxV) {
  if (!(minV <= maxV)) {
    s.lo = 0.0;
    s.hi = 1.0;
    return;
  }
  double lo = s.transform(minV);
  double hi = s.transform(maxV);
  if (s.log) {
    lo = std::floor(lo);
    hi = std::ceil(hi);
    if (hi <= lo) hi = lo + 1.0;
  } else {
    if (hi == lo) {
      const double pad = lo == 0.0 ? 1.0 : 0.5 * std::abs(lo);
      lo -= pad;
      hi += pad;
    } else {
      const double pad = 0.05 * (hi - lo);
      lo -= pad;
      hi += pad;
    }
  }
  s.lo = lo;
  s.hi = hi;
}

std::vector<double> ticks(const Scale& s) {
  std::vector<double> out;
  if (s.log) {
    const int first = static_cast<int>(std::lround(s.lo));
    const int last = static_cast<int>(std::lround(s.hi));
    const int stride = std::max(1, (last - first + 7) / 8);
    for (int e = first; e <= last; e += stride) out.push_back(std::pow(10.0, e));
    return out;
  }
  const double raw = (s.hi - s.lo) / 5.0;
  const double magnitude = std::pow(10.0, std::floor(std::log10(raw)));
  double step = magnitude;
  for (const double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * magnitude;
    if (step >= raw) break;
  }
  for (double v = std::ceil(s.lo / step) * step; v <= s.hi + 1e-9 * step; v += step) {
    out.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  }
  return out;
}

}  // namespace

SvgDocument emit_svg(const std::vector<PlotSeries>& series, const PlotAxes& axes) {
  require(!series.empty(), "emit_svg: need at least one series");
  SvgDocument doc;

  std::vector<std::vector<std::pair<double, double>>> kept(series.size());
  double minX = std::numeric_limits<double>::infinity();
  double maxX = -minX;
  double minY = minX;
  double maxY = -minX;
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& ser = series[s];
    require(ser.x.size() == ser.y.size(), "emit_svg: x and y differ in length");
    for (std::size_t i = 0; i < ser.x.size(); ++i) {
      const double x = ser.x[i];
      const double y = ser.y[i];
      const bool ok = std::isfinite(x) && std::isfinite(y) && (!axes.logX || x > 0.0) &&
                      (!axes.logY || y > 0.0);
      if (!ok) {
        ++doc.droppedPoints;
        continue;
      }
      kept[s].emplace_back(x, y);
      minX = std::min(minX, x);
      maxX = std::max(maxX, x);
      minY = std::min(minY, y);
      maxY = std::max(maxY, y);
    }
  }

  const double w = axes.width;
  const double h = axes.height;
  Scale sx{axes.logX, 0.0, 1.0, kLeft, w - kRight};
  Scale sy{axes.logY, 0.0, 1.0, h - kBottom, kTop};
  fit_range(sx, minX, maxX);
  fit_range(sy, minY, maxY);

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << axes.width << "\" height=\""
      << axes.height << "\" viewBox=\"0 0 " << axes.width << ' ' << axes.height << "\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << axes.width << "\" height=\"" << axes.height
      << "\" fill=\"white\"/>\n";
  out << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  if (!axes.title.empty()) {
    out << "<text x=\"" << fixed(0.5 * (kLeft + w - kRight)) << "\" y=\"22\" text-anchor=\"middle\" "
        << "font-size=\"14\">" << escape(axes.title) << "</text>\n";
  }

  const double x0 = kLeft;
  const double x1 = w - kRight;
  const double y0 = h - kBottom;
  const double y1 = kTop;
  auto pixelX = [&](double v) { return sx.pixelLo + (v - sx.lo) / (sx.hi - sx.lo) * (sx.pixelHi - sx.pixelLo); };
  auto pixelY = [&](double v) { return sy.pixelLo + (v - sy.lo) / (sy.hi - sy.lo) * (sy.pixelHi - sy.pixelLo); };

  for (const double t : ticks(sx)) {
    const double px = pixelX(sx.transform(t));
    out << "<line x1=\"" << fixed(px) << "\" y1=\"" << fixed(y0) << "\" x2=\"" << fixed(px)
        << "\" y2=\"" << fixed(y1) << "\" stroke=\"#e5e5e5\"/>\n";
    out << "<text x=\"" << fixed(px) << "\" y=\"" << fixed(y0 + 16) << "\" text-anchor=\"middle\">"
        << label_number(t) << "</text>\n";
  }
  for (const double t : ticks(sy)) {
    const double py = pixelY(sy.transform(t));
    out << "<line x1=\"" << fixed(x0) << "\" y1=\"" << fixed(py) << "\" x2=\"" << fixed(x1)
        << "\" y2=\"" << fixed(py) << "\" stroke=\"#e5e5e5\"/>\n";
    out << "<text x=\"" << fixed(x0 - 6) << "\" y=\"" << fixed(py + 4) << "\" text-anchor=\"end\">"
        << label_number(t) << "</text>\n";
  }
  out << "<line x1=\"" << fixed(x0) << "\" y1=\"" << fixed(y0) << "\" x2=\"" << fixed(x1)
      << "\" y2=\"" << fixed(y0) << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << fixed(x0) << "\" y1=\"" << fixed(y0) << "\" x2=\"" << fixed(x0)
      << "\" y2=\"" << fixed(y1) << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << fixed(0.5 * (x0 + x1)) << "\" y=\"" << fixed(h - 14)
      << "\" text-anchor=\"middle\">" << escape(axes.xLabel) << (axes.logX ? " (log)" : "")
      << "</text>\n";
  out << "<text x=\"16\" y=\"" << fixed(0.5 * (y0 + y1)) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << fixed(0.5 * (y0 + y1)) << ")\">" << escape(axes.yLabel) << (axes.logY ? " (log)" : "")
      << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& ser = series[s];
    const char* color = kPalette[s % kPalette.size()];
    const bool lines = ser.style != PlotSeries::Style::Markers;
    const bool markers = ser.style != PlotSeries::Style::Lines;
    if (lines && kept[s].size() >= 2) {
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
      if (ser.dashed) out << " stroke-dasharray=\"6,4\"";
      out << " points=\"";
      for (std::size_t i = 0; i < kept[s].size(); ++i) {
        if (i) out << ' ';
        out << fixed(sx(kept[s][i].first)) << ',' << fixed(sy(kept[s][i].second));
      }
      out << "\"/>\n";
    }
    if (markers) {
      for (const auto& [x, y] : kept[s]) {
        out << "<circle cx=\"" << fixed(sx(x)) << "\" cy=\"" << fixed(sy(y)) << "\" r=\"3\" fill=\""
            << color << "\"/>\n";
      }
    }
    const double ly = kTop + 10.0 + 18.0 * static_cast<double>(s);
    const double lx = w - kRight + 14.0;
    out << "<line x1=\"" << fixed(lx) << "\" y1=\"" << fixed(ly) << "\" x2=\"" << fixed(lx + 20)
        << "\" y2=\"" << fixed(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"";
    if (ser.dashed) out << " stroke-dasharray=\"6,4\"";
    out << "/>\n";
    out << "<text x=\"" << fixed(lx + 26) << "\" y=\"" << fixed(ly + 4) << "\">" << escape(ser.label)
        << "</text>\n";
  }
  out << "</g>\n</svg>\n";
  doc.text = out.str();
  return doc;
}

}  // namespace pfscale::experiment
