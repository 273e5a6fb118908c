#ifndef WOLFF_LAB_SVG_HPP
#define WOLFF_LAB_SVG_HPP

// Minimal SVG line and scatter plots with linear axes.

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "wolff_lab/planar.hpp"

namespace wolff_lab::svg {

struct Series {
  std::string label;
  std::vector<Vec2> points;
  /// Symmetric vertical error bars, one per point, or empty.
  std::vector<double> errors;
  bool line = true;
  bool markers = true;
  std::string color = "#1f77b4";
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  /// Horizontal reference lines.
  std::vector<double> y_refs;
  int width = 640;
  int height = 420;
};

namespace detail {

inline std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

/// About five round tick values covering [lo, hi].
inline std::vector<double> ticks(double lo, double hi) {
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) {
      step = m * mag;
      break;
    }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  return out;
}

}  // namespace detail

inline std::string render(const Plot& plot) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : plot.series)
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      const double e = s.errors.empty() ? 0.0 : s.errors[i];
      x0 = std::min(x0, s.points[i].x);
      x1 = std::max(x1, s.points[i].x);
      y0 = std::min(y0, s.points[i].y - e);
      y1 = std::max(y1, s.points[i].y + e);
    }
  for (double r : plot.y_refs) {
    y0 = std::min(y0, r);
    y1 = std::max(y1, r);
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 <= 0) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 <= 0) y0 -= 0.5 * std::max(1.0, std::abs(y0)), y1 += 0.5 * std::max(1.0, std::abs(y1));
  const double pad_y = 0.05 * (y1 - y0);
  y0 -= pad_y;
  y1 += pad_y;

  const double left = 70, right = 150, top = 40, bottom = 50;
  const double pw = plot.width - left - right, ph = plot.height - top - bottom;
  auto X = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto Y = [&](double y) { return top + (y1 - y) / (y1 - y0) * ph; };
  using detail::num;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << plot.width << "\" height=\"" << plot.height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << num(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
     << detail::escape(plot.title) << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : detail::ticks(x0, x1)) {
    os << "<line x1=\"" << num(X(t)) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(X(t)) << "\" y2=\""
       << num(top + ph + 5) << "\" stroke=\"black\"/>";
    os << "<text x=\"" << num(X(t)) << "\" y=\"" << num(top + ph + 18) << "\" text-anchor=\"middle\">" << num(t)
       << "</text>\n";
  }
  for (double t : detail::ticks(y0, y1)) {
    os << "<line x1=\"" << num(left - 5) << "\" y1=\"" << num(Y(t)) << "\" x2=\"" << left << "\" y2=\"" << num(Y(t))
       << "\" stroke=\"black\"/>";
    os << "<text x=\"" << num(left - 8) << "\" y=\"" << num(Y(t) + 4) << "\" text-anchor=\"end\">" << num(t)
       << "</text>\n";
  }
  os << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << plot.height - 10 << "\" text-anchor=\"middle\">"
     << detail::escape(plot.x_label) << "</text>\n";
  os << "<text x=\"16\" y=\"" << num(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << num(top + ph / 2) << ")\">" << detail::escape(plot.y_label) << "</text>\n";
  for (double r : plot.y_refs)
    os << "<line x1=\"" << left << "\" y1=\"" << num(Y(r)) << "\" x2=\"" << num(left + pw) << "\" y2=\"" << num(Y(r))
       << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";

  int row = 0;
  for (const auto& s : plot.series) {
    if (s.line && s.points.size() > 1) {
      os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
      for (const auto& p : s.points) os << num(X(p.x)) << ',' << num(Y(p.y)) << ' ';
      os << "\"/>\n";
    }
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      const auto& p = s.points[i];
      if (!s.errors.empty())
        os << "<line x1=\"" << num(X(p.x)) << "\" y1=\"" << num(Y(p.y - s.errors[i])) << "\" x2=\"" << num(X(p.x))
           << "\" y2=\"" << num(Y(p.y + s.errors[i])) << "\" stroke=\"" << s.color << "\"/>\n";
      if (s.markers)
        os << "<circle cx=\"" << num(X(p.x)) << "\" cy=\"" << num(Y(p.y)) << "\" r=\"3\" fill=\"" << s.color
           << "\"/>\n";
    }
    const double ly = top + 14 + 18 * row++;
    os << "<rect x=\"" << num(left + pw + 12) << "\" y=\"" << num(ly - 9) << "\" width=\"12\" height=\"10\" fill=\""
       << s.color << "\"/>";
    os << "<text x=\"" << num(left + pw + 30) << "\" y=\"" << num(ly) << "\">" << detail::escape(s.label)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline const std::vector<std::string>& palette() {
  static const std::vector<std::string> p{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
  return p;
}

}  // namespace wolff_lab::svg

#endif  // WOLFF_LAB_SVG_HPP
