#pragma once

#include <string>
#include <vector>

namespace pfscale::experiment {

struct PlotSeries {
  enum class Style { LinesAndMarkers, Lines, Markers };

  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  Style style = Style::LinesAndMarkers;
  bool dashed = false;
};

struct PlotAxes {
  std::string title;
  std::string xLabel;
  std::string yLabel;
  bool logX = false;
  bool logY = false;
  int width = 720;
  int height = 440;
};

struct SvgDocument {
  std::string text;
  /// Points left out because they were non-finite or non-positive on a log axis.
  int droppedPoints = 0;
};

/// Standalone line chart. A series gets a polyline only if at least two of
/// its points survive; output is a pure function of the input.
SvgDocument emit_svg(const std::vector<PlotSeries>& series, const PlotAxes& axes);

}  // namespace pfscale::experiment
