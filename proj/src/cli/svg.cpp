#include "maxent/cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace maxent::cli {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 160.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
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

AxisRange padded(double lo, double hi) {
  if (!(lo <= hi)) return {0.0, 1.0};
  if (lo == hi) return {lo - 0.5, hi + 0.5};
  const double pad = 0.02 * (hi - lo);
  return {lo - pad, hi + pad};
}

}  // namespace

SvgFigure::SvgFigure(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

void SvgFigure::add_histogram(const HistogramSummary& h, const std::string& color,
                              const std::string& label) {
  Layer l{Layer::Kind::Steps, color, label, h.edges, h.densities(), {}};
  layers_.push_back(std::move(l));
}

void SvgFigure::add_density(const Histogram2D& h, const std::string& color,
                            const std::string& label) {
  Layer l{Layer::Kind::Cells, color, label, {}, {}, {}};
  const std::size_t nx = h.edges_x.size() - 1;
  const std::size_t ny = h.edges_y.size() - 1;
  double top = 0.0;
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) top = std::max(top, h.density(i, j));
  }
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) {
      if (h.counts[i * ny + j] == 0) continue;
      l.cells.insert(l.cells.end(), {h.edges_x[i], h.edges_x[i + 1], h.edges_y[j],
                                     h.edges_y[j + 1], h.density(i, j) / top});
    }
  }
  l.xs = {h.edges_x.front(), h.edges_x.back()};
  l.ys = {h.edges_y.front(), h.edges_y.back()};
  layers_.push_back(std::move(l));
}

AxisRange SvgFigure::x_range() const {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& l : layers_) {
    lo = std::min(lo, l.xs.front());
    hi = std::max(hi, l.xs.back());
  }
  return padded(lo, hi);
}

AxisRange SvgFigure::y_range() const {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& l : layers_) {
    if (l.kind == Layer::Kind::Steps) {
      lo = std::min(lo, 0.0);
      for (double y : l.ys) hi = std::max(hi, y);
    } else {
      lo = std::min(lo, l.ys.front());
      hi = std::max(hi, l.ys.back());
    }
  }
  return padded(lo, hi);
}

std::string SvgFigure::render() const {
  const AxisRange xr = x_range();
  const AxisRange yr = y_range();
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return kTop + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) + "\" height=\"" +
       fmt(kHeight) + "\" viewBox=\"0 0 " + fmt(kWidth) + " " + fmt(kHeight) + "\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + fmt(kWidth) + "\" height=\"" + fmt(kHeight) +
       "\" fill=\"white\"/>\n";
  s += "<text x=\"" + fmt(kLeft) + "\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">" +
       escape(title_) + "</text>\n";

  for (const auto& l : layers_) {
    if (l.kind == Layer::Kind::Cells) {
      for (std::size_t c = 0; c + 4 < l.cells.size(); c += 5) {
        const double x0 = px(l.cells[c]), x1 = px(l.cells[c + 1]);
        const double y0 = py(l.cells[c + 3]), y1 = py(l.cells[c + 2]);
        s += "<rect x=\"" + fmt(x0) + "\" y=\"" + fmt(y0) + "\" width=\"" + fmt(x1 - x0) +
             "\" height=\"" + fmt(y1 - y0) + "\" fill=\"" + l.color + "\" fill-opacity=\"" +
             fmt(0.1 + 0.9 * l.cells[c + 4]) + "\"/>\n";
      }
    } else {
      s += "<polyline fill=\"none\" stroke=\"" + l.color + "\" stroke-width=\"1.5\" points=\"";
      s += fmt(px(l.xs.front())) + "," + fmt(py(0.0));
      for (std::size_t i = 0; i < l.ys.size(); ++i) {
        s += " " + fmt(px(l.xs[i])) + "," + fmt(py(l.ys[i]));
        s += " " + fmt(px(l.xs[i + 1])) + "," + fmt(py(l.ys[i]));
      }
      s += " " + fmt(px(l.xs.back())) + "," + fmt(py(0.0)) + "\"/>\n";
    }
  }

  // axes and ticks
  const double x_axis = kTop + ph;
  s += "<polyline fill=\"none\" stroke=\"black\" points=\"" + fmt(kLeft) + "," + fmt(kTop) + " " +
       fmt(kLeft) + "," + fmt(x_axis) + " " + fmt(kLeft + pw) + "," + fmt(x_axis) + "\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = xr.lo + (xr.hi - xr.lo) * k / 4.0;
    const double yv = yr.lo + (yr.hi - yr.lo) * k / 4.0;
    s += "<text x=\"" + fmt(px(xv)) + "\" y=\"" + fmt(x_axis + 18) +
         "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" + label(xv) +
         "</text>\n";
    s += "<text x=\"" + fmt(kLeft - 6) + "\" y=\"" + fmt(py(yv) + 4) +
         "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" + label(yv) +
         "</text>\n";
  }
  s += "<text x=\"" + fmt(kLeft + pw / 2) + "\" y=\"" + fmt(kHeight - 10) +
       "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">" +
       escape(x_label_) + "</text>\n";
  s += "<text x=\"16\" y=\"" + fmt(kTop + ph / 2) +
       "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
       fmt(kTop + ph / 2) + ")\">" + escape(y_label_) + "</text>\n";

  // legend
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const double y = kTop + 10 + 20.0 * static_cast<double>(i);
    const double x = kLeft + pw + 14;
    s += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(y - 9) + "\" width=\"12\" height=\"12\" fill=\"" +
         layers_[i].color + "\"/>\n";
    s += "<text x=\"" + fmt(x + 18) + "\" y=\"" + fmt(y + 1) +
         "\" font-family=\"sans-serif\" font-size=\"12\">" + escape(layers_[i].label) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace maxent::cli
