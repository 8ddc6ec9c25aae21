#pragma once

// Minimal static SVG plots built from rect, polyline and text elements.
// Output depends only on the data, so equal inputs give equal bytes.

#include <string>
#include <vector>

#include "maxent/sampler.hpp"

namespace maxent::cli {

struct AxisRange {
  double lo = 0.0;
  double hi = 1.0;
};

class SvgFigure {
 public:
  SvgFigure(std::string title, std::string x_label, std::string y_label);

  /// Histogram density as a step outline.
  void add_histogram(const HistogramSummary& h, const std::string& color, const std::string& label);

  /// One filled cell per non-empty bin, opacity proportional to density.
  void add_density(const Histogram2D& h, const std::string& color, const std::string& label);

  /// Axis ranges: the union of all layers, padded by 2% on each side.
  AxisRange x_range() const;
  AxisRange y_range() const;

  std::string render() const;

 private:
  struct Layer {
    enum class Kind { Steps, Cells } kind;
    std::string color;
    std::string label;
    // Steps: x edges and heights; Cells: (x0, x1, y0, y1, weight) per cell
    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<double> cells;
  };

  std::string title_;
  std::string x_label_;
  std::string y_label_;
  std::vector<Layer> layers_;
};

}  // namespace maxent::cli
